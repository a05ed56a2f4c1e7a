"""Structure dumps, canonical reports, and CSV rows.

The dump carries every causal edge with its separation, so chron is
recoverable as tau > 0 and a closed dump round-trips bit-exactly.  Edge
lists marked closed=false are treated as generators and closed on load.
Reports are written with sorted keys and fixed indentation, so identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .causal import CausalStructure, build_closure
from .errors import LorlenError
from .metric import metric_from_spec
from .product import region_from_spec


def structure_to_dict(cs: CausalStructure) -> dict:
    events = []
    for i in range(cs.n):
        ev: dict = {"id": i}
        if cs.has_coords():
            b = cs.bases[i]
            ev["base"] = list(b) if isinstance(b, tuple) else b
            ev["t"] = float(cs.times[i])
        events.append(ev)
    ui, vi = np.nonzero(cs.causal)
    edges = [
        {"u": int(u), "v": int(v), "tau": float(cs.tau[u, v])} for u, v in zip(ui, vi)
    ]
    out = {"events": events, "edges": edges, "closed": bool(cs.closed)}
    if cs.sigma is not None:
        out["sigma"] = cs.sigma.spec()
    if cs.window is not None:
        out["window"] = [cs.window[0], cs.window[1]]
    if cs.region is not None and hasattr(cs.region, "spec"):
        out["region"] = cs.region.spec()
    return out


def structure_from_dict(obj: dict) -> CausalStructure:
    try:
        events = obj["events"]
        edges = obj["edges"]
    except KeyError as exc:
        raise LorlenError(f"dump is missing {exc}") from None
    n = len(events)
    ids = [ev["id"] for ev in events]
    if sorted(ids) != list(range(n)):
        raise LorlenError("event ids must be exactly 0..n-1")
    triples = [(e["u"], e["v"], float(e["tau"])) for e in edges]
    if not obj.get("closed", True):
        cs = build_closure(n, triples)
        chron, causal, tau = cs.chron, cs.causal, cs.tau
    else:
        chron = np.zeros((n, n), dtype=bool)
        causal = np.zeros((n, n), dtype=bool)
        tau = np.zeros((n, n), dtype=float)
        for u, v, t in triples:
            if u == v:
                raise LorlenError(f"self edge at event {u}")
            causal[u, v] = True
            tau[u, v] = t
        chron[:] = tau > 0.0

    order = sorted(range(n), key=lambda k: events[k]["id"])
    has_coords = all("t" in events[k] for k in order) and n > 0
    bases = times = None
    if has_coords:
        bases = [
            tuple(events[k]["base"]) if isinstance(events[k]["base"], list) else events[k]["base"]
            for k in order
        ]
        times = np.array([float(events[k]["t"]) for k in order])
    sigma = metric_from_spec(obj["sigma"]) if "sigma" in obj else None
    window = tuple(obj["window"]) if "window" in obj else None
    region = region_from_spec(obj["region"]) if "region" in obj else None
    return CausalStructure(
        chron=chron,
        causal=causal,
        tau=tau,
        bases=bases,
        times=times,
        sigma=sigma,
        window=window,
        region=region,
        closed=True,
    )


def save_json(obj, path) -> Path:
    """Canonical writing: sorted keys, two-space indent, trailing newline."""
    path = Path(path)
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")
    return path


def load_json(path):
    return json.loads(Path(path).read_text())


def dump_structure(cs: CausalStructure, path) -> Path:
    return save_json(structure_to_dict(cs), path)


def load_structure(path) -> CausalStructure:
    return structure_from_dict(load_json(path))


def curves_from_report(report: dict) -> dict:
    """Pull the plottable rows out of a report, whichever kind it is."""
    curves: dict = {}
    growth = None
    if isinstance(report.get("curves"), dict):
        growth = report["curves"].get("window_growth")
    if not growth and isinstance(report.get("line"), dict):
        growth = report["line"].get("rows")
    if not growth and isinstance(report.get("rows"), list):
        growth = report["rows"]
    if growth:
        curves["window_growth"] = [
            {"x": r["expected"], "y": r["value"], "n": r["n"]} for r in growth
        ]
    sweep = report.get("sweep")
    if sweep:
        curves["density_tau_error"] = [
            {"x": r["density"], "y": r["median_rel_error"], "max": r["max_rel_error"]}
            for r in sweep
        ]
    return curves


def write_curves_csv(curves: dict, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["curve", "x", "y"])
        for name in sorted(curves):
            for row in curves[name]:
                w.writerow([name, row["x"], row["y"]])
    return path
