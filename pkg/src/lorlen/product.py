"""Metric products of a compact base with a time window.

Relations are closed-form: with base distance d and times s <= t, the pair is
chronological iff t - s > d, causal iff t - s >= d, and the time separation
is sqrt((t - s)^2 - d^2) on causal pairs.  The symmetric distance
sqrt((t - s)^2 + d^2) plays the role of the ambient metric for convergence
talk.  Sample sets come from seeded Poisson sprinkling or exact grids,
optionally restricted to a sub-region of the slab.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .causal import CausalStructure
from .errors import LorlenError
from .metric import MetricSpace, metric_from_spec

_BLOCK = 512


class FullRegion:
    name = "full"

    def contains(self, bases, times, sigma, window):
        return np.ones(len(times), dtype=bool)

    def slack(self, bases, times, sigma, window):
        """Time headroom before a point leaves the region (inf when unbounded)."""
        return np.full(len(times), np.inf)

    def spec(self):
        return "full"


@dataclass
class DiamondRegion:
    """Intersection of the closed future of a bottom apex and past of a top apex."""

    bottom: tuple
    top: tuple

    name = "diamond"

    def _gaps(self, bases, times, sigma):
        t = np.asarray(times, dtype=float)
        d_bot = sigma.pairwise(bases, [self.bottom[0]])[:, 0]
        d_top = sigma.pairwise(bases, [self.top[0]])[:, 0]
        lower = (t - self.bottom[1]) - d_bot
        upper = (self.top[1] - t) - d_top
        return lower, upper

    def contains(self, bases, times, sigma, window):
        lower, upper = self._gaps(bases, times, sigma)
        return (lower >= 0) & (upper >= 0)

    def slack(self, bases, times, sigma, window):
        lower, upper = self._gaps(bases, times, sigma)
        return np.minimum(lower, upper)

    def spec(self):
        return {
            "diamond": {
                "bottom": [self.bottom[0], self.bottom[1]],
                "top": [self.top[0], self.top[1]],
            }
        }


@dataclass
class BandRegion:
    lo: float
    hi: float

    name = "band"

    def contains(self, bases, times, sigma, window):
        t = np.asarray(times, dtype=float)
        return (t >= self.lo) & (t <= self.hi)

    def slack(self, bases, times, sigma, window):
        t = np.asarray(times, dtype=float)
        return np.minimum(t - self.lo, self.hi - t)

    def spec(self):
        return {"band": [self.lo, self.hi]}


def region_from_spec(obj) -> object:
    if obj in (None, "full"):
        return FullRegion()
    if isinstance(obj, dict) and "diamond" in obj:
        d = obj["diamond"]
        b, t = d["bottom"], d["top"]
        return DiamondRegion(bottom=(_point(b[0]), float(b[1])), top=(_point(t[0]), float(t[1])))
    if isinstance(obj, dict) and "band" in obj:
        lo, hi = obj["band"]
        return BandRegion(float(lo), float(hi))
    raise LorlenError(f"unknown region spec {obj!r}")


def _point(p):
    return tuple(p) if isinstance(p, list) else p


@dataclass
class ProductSpace:
    sigma: MetricSpace
    window: tuple[float, float]
    region: object = field(default_factory=FullRegion)

    def __post_init__(self):
        lo, hi = self.window
        if not hi > lo:
            raise LorlenError("window must have positive height")
        self.window = (float(lo), float(hi))

    def relation(self, e1: tuple, e2: tuple) -> "ProductRelation":
        (x, s), (y, t) = e1, e2
        d = self.sigma.dist(x, y)
        dt = t - s
        causal = dt >= d and e1 != e2
        chron = dt > d
        tau = float(np.sqrt(dt * dt - d * d)) if causal else 0.0
        return ProductRelation(chron, causal, tau, float(np.hypot(dt, d)))

    def contains(self, bases, times) -> np.ndarray:
        t = np.asarray(times, dtype=float)
        inside = (t >= self.window[0]) & (t <= self.window[1])
        return inside & self.region.contains(bases, times, self.sigma, self.window)

    def region_slack(self, bases, times) -> np.ndarray:
        return self.region.slack(bases, times, self.sigma, self.window)

    def spec(self) -> dict:
        return {
            "sigma": self.sigma.spec(),
            "window": [self.window[0], self.window[1]],
            "region": self.region.spec(),
        }


class ProductRelation(NamedTuple):
    chron: bool
    causal: bool
    tau: float
    d_metric: float


@dataclass
class SprinkleConfig:
    """Sampling recipe: Poisson with a density, or an exact grid."""

    mode: str = "poisson"
    density: float | None = None
    nx: int | None = None
    nt: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.mode == "poisson":
            if not self.density or self.density <= 0:
                raise LorlenError("poisson mode needs a positive density")
        elif self.mode == "grid":
            if not self.nx or not self.nt or self.nx < 1 or self.nt < 2:
                raise LorlenError("grid mode needs nx >= 1 and nt >= 2")
        else:
            raise LorlenError(f"unknown sprinkle mode {self.mode!r}")

    def spec(self) -> dict:
        if self.mode == "poisson":
            mode = {"poisson": {"density": self.density}}
        else:
            mode = {"grid": {"nx": self.nx, "nt": self.nt}}
        return {"mode": mode, "seed": self.seed}


def sprinkle_config_from_spec(obj: dict) -> SprinkleConfig:
    mode = obj["mode"]
    if "poisson" in mode:
        return SprinkleConfig(mode="poisson", density=float(mode["poisson"]["density"]), seed=int(obj.get("seed", 0)))
    if "grid" in mode:
        g = mode["grid"]
        return SprinkleConfig(mode="grid", nx=int(g["nx"]), nt=int(g["nt"]), seed=int(obj.get("seed", 0)))
    raise LorlenError(f"unknown sprinkle mode in {obj!r}")


def load_run_spec(obj: dict) -> tuple[ProductSpace, SprinkleConfig]:
    """Split a flat sprinkle-config object into space and sampling parts."""
    sigma = metric_from_spec(obj["sigma"])
    window = tuple(float(x) for x in obj["window"])
    region = region_from_spec(obj.get("region", "full"))
    ps = ProductSpace(sigma=sigma, window=window, region=region)
    return ps, sprinkle_config_from_spec(obj)


class SampleSet:
    """Mutable collection of (base, time) sample points with stable ids."""

    def __init__(self):
        self.bases: list = []
        self.times: list[float] = []
        self._index: dict = {}

    def __len__(self) -> int:
        return len(self.times)

    def add_point(self, base, t: float) -> int:
        key = (base, float(t))
        if key in self._index:
            return self._index[key]
        self.bases.append(base)
        self.times.append(float(t))
        eid = len(self.times) - 1
        self._index[key] = eid
        return eid

    def id_of(self, base, t: float) -> int:
        try:
            return self._index[(base, float(t))]
        except KeyError:
            raise LorlenError(f"no sample at ({base!r}, {t})") from None

    def points(self) -> list[tuple]:
        return list(zip(self.bases, self.times))


def sprinkle(ps: ProductSpace, cfg: SprinkleConfig) -> SampleSet:
    """Deterministic seeded sampling of the product slab.

    Poisson mode draws a Poisson count at density times slab area, places
    points uniformly, and keeps those inside the region (exactly a Poisson
    process on the region).  Grid mode lays an nx-by-nt lattice intersected
    with the region.
    """
    samples = SampleSet()
    lo, hi = ps.window
    if cfg.mode == "poisson":
        rng = np.random.default_rng(cfg.seed)
        area = ps.sigma.measure * (hi - lo)
        count = int(rng.poisson(cfg.density * area))
        bases = ps.sigma.sample_uniform(rng, count)
        times = rng.uniform(lo, hi, count)
        keep = ps.contains(bases, times)
        for b, t, k in zip(bases, times, keep):
            if k:
                samples.add_point(b, float(t))
    else:
        bases = ps.sigma.grid_points(cfg.nx)
        times = [lo + (hi - lo) * j / (cfg.nt - 1) for j in range(cfg.nt)]
        for t in times:
            keep = ps.contains(bases, [t] * len(bases))
            for b, k in zip(bases, keep):
                if k:
                    samples.add_point(b, float(t))
    return samples


def vertical_chain(ps: ProductSpace, samples: SampleSet, base, times: Sequence[float]) -> list[int]:
    """Add fiber events over one base point; returns their event ids.

    Times must be strictly increasing and inside the window and region;
    consecutive time separations along the fiber are exact time differences.
    """
    ts = [float(t) for t in times]
    if any(b >= a for b, a in zip(ts, ts[1:])):
        raise LorlenError("fiber times must be strictly increasing")
    inside = ps.contains([base] * len(ts), ts)
    if not inside.all():
        bad = ts[int(np.flatnonzero(~inside)[0])]
        raise LorlenError(f"fiber point ({base!r}, {bad}) is outside the space")
    return [samples.add_point(base, t) for t in ts]


def build_causal_structure(ps: ProductSpace, samples: SampleSet) -> CausalStructure:
    """Closed-form relation tables over the sample set (O(n^2), blockwise)."""
    n = len(samples)
    times = np.asarray(samples.times, dtype=float)
    chron = np.zeros((n, n), dtype=bool)
    causal = np.zeros((n, n), dtype=bool)
    tau = np.zeros((n, n), dtype=float)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        d = ps.sigma.pairwise(samples.bases[start:stop], samples.bases)
        dt = times[None, :] - times[start:stop, None]
        c = dt >= d
        c[np.arange(start, stop) - start, np.arange(start, stop)] = False
        causal[start:stop] = c
        chron[start:stop] = dt > d
        gap = np.where(c, dt * dt - d * d, 0.0)
        tau[start:stop] = np.sqrt(np.maximum(gap, 0.0))
    return CausalStructure(
        chron=chron,
        causal=causal,
        tau=tau,
        bases=list(samples.bases),
        times=times,
        sigma=ps.sigma,
        window=ps.window,
        region=ps.region,
    )


def nn_spacing(cs: CausalStructure) -> float:
    """Mean nearest-neighbour symmetric distance across the sample."""
    if not cs.has_coords() or cs.sigma is None:
        raise LorlenError("spacing needs coordinates")
    n = cs.n
    if n < 2:
        return 0.0
    best = np.full(n, np.inf)
    for start in range(0, n, _BLOCK):
        stop = min(start + _BLOCK, n)
        d = cs.sigma.pairwise(cs.bases[start:stop], cs.bases)
        dt = cs.times[None, :] - cs.times[start:stop, None]
        dist = np.sqrt(dt * dt + d * d)
        dist[np.arange(start, stop) - start, np.arange(start, stop)] = np.inf
        best[start:stop] = dist.min(axis=1)
    return float(best.mean())


@dataclass
class ProbeResult:
    converged: bool
    all_related: bool
    limit_related: bool
    limit_in_region: bool

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "all_related": self.all_related,
            "limit_related": self.limit_related,
            "limit_in_region": self.limit_in_region,
        }


def causal_closedness_probe(
    ps: ProductSpace,
    sequences: Sequence[Sequence[tuple[tuple, tuple]]],
    tol: float = 1e-9,
) -> list[ProbeResult]:
    """Check that causal relations survive at the limit of convergent pairs.

    Each sequence is a list of event pairs; the final pair stands in for the
    limit.  Convergence requires the symmetric-distance steps between
    consecutive pairs to shrink; non-convergent input is flagged rather than
    judged.  The limit relation is evaluated with tolerance scaled by the
    final step width.
    """
    out = []
    for seq in sequences:
        if len(seq) < 2:
            raise LorlenError("probe sequences need at least two pairs")
        steps = []
        for (a1, b1), (a2, b2) in zip(seq, seq[1:]):
            da = ps.relation(a1, a2).d_metric if a1 != a2 else 0.0
            db = ps.relation(b1, b2).d_metric if b1 != b2 else 0.0
            steps.append(max(da, db))
        shrinking = all(s2 <= s1 + tol for s1, s2 in zip(steps, steps[1:]))
        converged = shrinking and steps[-1] <= max(10 * tol, steps[0] * 0.25 + tol)
        all_related = all(ps.relation(a, b).causal for a, b in seq[:-1])
        (x, s), (y, t) = seq[-1]
        slack = steps[-1] + tol
        d = ps.sigma.dist(x, y)
        limit_related = (t - s) >= d - slack
        inside = ps.contains([x, y], [s, t])
        out.append(
            ProbeResult(
                converged=bool(converged),
                all_related=bool(all_related),
                limit_related=bool(limit_related),
                limit_in_region=bool(inside.all()),
            )
        )
    return out
