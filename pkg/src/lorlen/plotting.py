"""Figures for report curves, rendered straight to files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)


def plot_window_growth(rows, path) -> Path:
    """Maximizer value against window size, with the exact-fiber reference."""
    path = Path(path)
    xs = [r["x"] for r in rows]
    ys = [r["y"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(xs, xs, "--", color="0.6", label="exact fiber (slope 1)")
    ax.plot(xs, ys, "o-", label="maximizer value")
    ax.set_xlabel("fiber length 2n")
    ax.set_ylabel("longest chain value")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_density_error(rows, path) -> Path:
    """Median maximizer shortfall against sprinkle density, log-log."""
    path = Path(path)
    xs = [r["x"] for r in rows]
    ys = [r["y"] for r in rows]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.loglog(xs, ys, "o-")
    ax.set_xlabel("density")
    ax.set_ylabel("median relative error")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


_PLOTTERS = {
    "window_growth": plot_window_growth,
    "density_tau_error": plot_density_error,
}


def render_curves(curves: dict, stem: Path) -> list[Path]:
    """One PNG per known curve, named after the CSV stem."""
    written = []
    for name in sorted(curves):
        fn = _PLOTTERS.get(name)
        if fn is not None and curves[name]:
            written.append(fn(curves[name], stem.with_name(f"{stem.stem}_{name}.png")))
    return written
