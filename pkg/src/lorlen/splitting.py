"""End-to-end splitting verification on product samples.

The pipeline finds a candidate line as the limit of a maximizer family
between fiber anchors, certifies it timelike (chronological steps, no null
lines anywhere, a single future boundary class), recovers a global time from
separations to the line together with a base metric from causal-cone gaps,
and validates the recovered base with the quadruple curvature test.  Every
stage is seeded, so a fixed config yields a bit-identical report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .causal import CausalStructure, check_axioms
from .cboundary import future_boundary_classes
from .errors import LorlenError, NoLimitError, NotRelatedError
from .geodesy import (
    Chain,
    compute_links,
    extract_limit_line,
    is_line,
    line_defect,
    maximizer,
    null_chain_scan,
)
from .metric import MatrixMetric, quadruple_curvature_test
from .product import build_causal_structure, load_run_spec, nn_spacing, sprinkle

_EXPECTS = ("pass", "fail")


def _as_point(p):
    return tuple(p) if isinstance(p, (list, tuple)) else p


@dataclass
class RunConfig:
    """Everything one verification run needs, JSON round-trippable."""

    space: dict
    fiber: object
    windows: tuple[float, ...]
    seed: int = 0
    margin: float | None = None
    cell: float | None = None
    core: float | None = None
    slab: float | None = None
    line_tol: float | None = None
    order_slack: float | None = None
    curvature_tol: float = 1e-6
    metric_tol: float | None = None
    axiom_budget: int = 20_000
    pair_budget: int = 4_000
    quad_budget: int = 2_000
    expect: str = "pass"
    output: str | None = None

    def __post_init__(self):
        self.fiber = _as_point(self.fiber)
        self.windows = tuple(float(n) for n in self.windows)
        if not self.windows or any(n <= 0 for n in self.windows):
            raise LorlenError("window sizes must be positive")
        if any(b >= a for b, a in zip(self.windows, self.windows[1:])):
            raise LorlenError("window sizes must be strictly increasing")
        for name in ("margin", "cell", "core", "slab", "line_tol", "order_slack",
                     "curvature_tol", "metric_tol"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise LorlenError(f"{name} must be positive")
        for name in ("axiom_budget", "pair_budget", "quad_budget"):
            if getattr(self, name) <= 0:
                raise LorlenError(f"{name} must be positive")
        if self.expect not in _EXPECTS:
            raise LorlenError(f"expect must be one of {_EXPECTS}")

    @classmethod
    def from_spec(cls, obj: dict) -> "RunConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(obj) - known
        if extra:
            raise LorlenError(f"unknown run config keys: {sorted(extra)}")
        if "space" not in obj or "fiber" not in obj or "windows" not in obj:
            raise LorlenError("run config needs space, fiber and windows")
        return cls(**obj)

    def spec(self) -> dict:
        out = {
            "space": self.space,
            "fiber": list(self.fiber) if isinstance(self.fiber, tuple) else self.fiber,
            "windows": list(self.windows),
            "seed": self.seed,
            "expect": self.expect,
        }
        for name in ("margin", "cell", "core", "slab", "line_tol", "order_slack",
                     "metric_tol", "output"):
            v = getattr(self, name)
            if v is not None:
                out[name] = v
        out["curvature_tol"] = self.curvature_tol
        out["axiom_budget"] = self.axiom_budget
        out["pair_budget"] = self.pair_budget
        out["quad_budget"] = self.quad_budget
        return out


def prepare_run(cfg: RunConfig):
    """Sprinkle the space, add fiber anchors, build the structure.

    Anchors sit at (fiber, mid - n) and (fiber, mid + n) for each window
    size n that fits inside the window and region; sizes that do not fit are
    skipped and reported, which is how bounded regions starve the pipeline.
    """
    ps, scfg = load_run_spec(dict(cfg.space, seed=cfg.seed))
    samples = sprinkle(ps, scfg)
    lo, hi = ps.window
    mid = 0.5 * (lo + hi)
    anchor_ids = []
    skipped = []
    for n in cfg.windows:
        t1, t2 = mid - n, mid + n
        if t1 < lo or t2 > hi or not ps.contains([cfg.fiber, cfg.fiber], [t1, t2]).all():
            skipped.append(n)
            continue
        a = samples.add_point(cfg.fiber, t1)
        b = samples.add_point(cfg.fiber, t2)
        anchor_ids.append((n, a, b))
    cs = build_causal_structure(ps, samples)
    return ps, cs, anchor_ids, skipped


def fiber_anchors(cs: CausalStructure, p, windows, tol: float = 1e-9):
    """Locate existing events at (p, mid -+ n); sizes without both are skipped."""
    if not cs.has_coords() or cs.sigma is None:
        raise LorlenError("anchor lookup needs coordinates")
    p = _as_point(p)
    lo, hi = cs.window
    mid = 0.5 * (lo + hi)
    d_to_p = cs.sigma.pairwise(cs.bases, [p])[:, 0]
    found, skipped = [], []
    for n in windows:
        pair = []
        for t in (mid - n, mid + n):
            hit = np.flatnonzero((d_to_p <= tol) & (np.abs(cs.times - t) <= tol))
            if hit.size:
                pair.append(int(hit[0]))
        if len(pair) == 2:
            found.append((float(n), pair[0], pair[1]))
        else:
            skipped.append(float(n))
    return found, skipped


@dataclass
class LineSearchResult:
    chain: Chain
    line_ok: bool
    complete: bool
    defect: float
    growth_slope: float
    tol: float
    rows: list = field(default_factory=list)
    limit: dict = field(default_factory=dict)
    skipped_windows: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.line_ok and self.complete

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "line_ok": self.line_ok,
            "complete": self.complete,
            "defect": self.defect,
            "growth_slope": self.growth_slope,
            "tol": self.tol,
            "chain": self.chain.to_dict(),
            "rows": self.rows,
            "limit": self.limit,
            "skipped_windows": self.skipped_windows,
        }


def pipeline_find_line(
    cs: CausalStructure,
    p=None,
    windows=None,
    *,
    anchors=None,
    cell: float | None = None,
    slab: float | None = None,
    line_tol: float | None = None,
    skipped_windows=None,
) -> LineSearchResult:
    """Maximizers between nested fiber anchors, stitched and tested as a line.

    Diagnostics carry the per-window values against the exact fiber length
    2n and the growth slope; completeness asks the values to keep pace with
    the windows (slope >= 0.9), which bounded regions cannot sustain.
    """
    if anchors is None:
        anchors, auto_skipped = fiber_anchors(cs, p, windows)
        skipped_windows = list(skipped_windows or []) + auto_skipped
    if len(anchors) < 2:
        raise NoLimitError("fiber is not sampled in at least two window sizes")
    links = compute_links(cs) if cs.n >= 4000 else None
    rows = []
    chains = []
    for n, a, b in anchors:
        res = maximizer(cs, a, b, links=links)
        chains.append(res.chain)
        rows.append(
            {
                "n": float(n),
                "value": res.value,
                "expected": 2.0 * float(n),
                "events": len(res.chain.events),
                "ties": res.tie_count,
            }
        )
    xs = np.array([r["expected"] for r in rows])
    ys = np.array([r["value"] for r in rows])
    growth_slope = float(np.polyfit(xs, ys, 1)[0])
    complete = growth_slope >= 0.9

    if cell is None:
        # the family concentrates but wanders transversally at finite density,
        # so the stitch resolution follows its observed spread around the anchors
        p = cs.bases[anchors[0][1]]
        spread = cs.sigma.pairwise(
            [cs.bases[e] for c in chains for e in c.events], [p]
        )[:, 0]
        cell = max(2.0 * nn_spacing(cs), 1.2 * float(np.quantile(spread, 0.9)))
    if slab is None:
        slab = max(1.0, 4.0 * cell)
    limit = extract_limit_line(cs, chains, cell=cell, slab=slab)
    ev = limit.chain.events
    span = float(cs.times[ev[-1]] - cs.times[ev[0]]) if len(ev) > 1 else 0.0
    # worst stitched defect scale: span * (2 cell)^2 / (2 slab^2), with headroom
    tol = line_tol if line_tol is not None else max(1e-9, 8.0 * span * (cell / slab) ** 2)
    try:
        ok = is_line(cs, ev, tol=tol)
        defect = line_defect(cs, ev)
    except LorlenError:
        ok = False
        defect = float("inf")
    return LineSearchResult(
        chain=limit.chain,
        line_ok=ok,
        complete=complete,
        defect=defect,
        growth_slope=growth_slope,
        tol=float(tol),
        rows=rows,
        limit=limit.to_dict(),
        skipped_windows=[float(n) for n in (skipped_windows or [])],
    )


@dataclass
class TimelikeCertificate:
    timelike: bool
    steps_ok: bool
    bad_step: int | None
    no_null_lines: bool
    null_vacuous: bool
    boundary_classes: int | None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "timelike": self.timelike,
            "steps_ok": self.steps_ok,
            "bad_step": self.bad_step,
            "no_null_lines": self.no_null_lines,
            "null_vacuous": self.null_vacuous,
            "boundary_classes": self.boundary_classes,
            "notes": self.notes,
        }


def certify_timelike(cs: CausalStructure, chain) -> TimelikeCertificate:
    """Certificate that a candidate line is genuinely timelike.

    Three conditions, all required: every consecutive step chronological,
    the null-chain scan finds no unobstructed null geodesic anywhere, and
    the future boundary is a single class.
    """
    ev = list(chain.events if isinstance(chain, Chain) else chain)
    notes = []
    bad_step = None
    if len(ev) < 2:
        steps_ok = False
        notes.append("chain too short to certify")
    else:
        steps_ok = True
        for i, (u, v) in enumerate(zip(ev, ev[1:])):
            if not cs.chron[u, v]:
                steps_ok = False
                bad_step = i
                break
    scan = null_chain_scan(cs)
    if scan.vacuous:
        notes.append("no null pairs sampled; null verdict vacuous")
    try:
        classes = len(future_boundary_classes(cs))
    except LorlenError as exc:
        classes = None
        notes.append(f"boundary classes unavailable: {exc}")
    timelike = steps_ok and scan.no_null_lines and classes == 1
    return TimelikeCertificate(
        timelike=timelike,
        steps_ok=steps_ok,
        bad_step=bad_step,
        no_null_lines=scan.no_null_lines,
        null_vacuous=scan.vacuous,
        boundary_classes=classes,
        notes=notes,
    )


@dataclass(frozen=True)
class TimeEstimate:
    value: float
    bound: float | None
    anchor: int


def _line_ids(cs: CausalStructure, line) -> np.ndarray:
    ev = np.asarray(list(line.events if isinstance(line, Chain) else line), dtype=int)
    if ev.size == 0:
        raise LorlenError("empty line")
    return ev[np.argsort(cs.times[ev], kind="stable")]


def busemann_times(cs: CausalStructure, line, events=None):
    """Recovered time for each event: latest-line-event time minus separation.

    Returns (values, bounds, anchors, valid): entries of events not in the
    causal past of any line event are flagged invalid.  Bounds are the
    second-order closed-form error d^2 / (2 dt) on coordinate inputs.
    """
    lids = _line_ids(cs, line)
    evs = np.arange(cs.n) if events is None else np.asarray(list(events), dtype=int)
    # an event anchors at itself with zero separation, so the line top is usable
    C = cs.causal[np.ix_(evs, lids)] | (evs[:, None] == lids[None, :])
    valid = C.any(axis=1)
    last = C.shape[1] - 1 - np.argmax(C[:, ::-1], axis=1)
    last[~valid] = 0
    anchors = lids[last]
    values = cs.times[anchors] - cs.tau[evs, anchors]
    bounds = None
    if cs.has_coords() and cs.sigma is not None:
        d = np.array(
            [cs.sigma.dist(cs.bases[e], cs.bases[g]) for e, g in zip(evs, anchors)]
        )
        dt = cs.times[anchors] - cs.times[evs]
        with np.errstate(divide="ignore", invalid="ignore"):
            bounds = np.where(dt > 0, d * d / (2.0 * np.maximum(dt, 1e-300)), 0.0)
    return values, bounds, anchors, valid


def busemann_time(cs: CausalStructure, line, e: int) -> TimeEstimate:
    values, bounds, anchors, valid = busemann_times(cs, line, [e])
    if not valid[0]:
        raise NotRelatedError(f"event {e} is not in the past of the line")
    return TimeEstimate(
        value=float(values[0]),
        bound=None if bounds is None else float(bounds[0]),
        anchor=int(anchors[0]),
    )


@dataclass
class MapCheck:
    worst_tau_error: float | None
    order_disagreements: int
    ties: int
    pairs: int
    skipped: int

    def to_dict(self) -> dict:
        return {
            "worst_tau_error": self.worst_tau_error,
            "order_disagreements": self.order_disagreements,
            "ties": self.ties,
            "pairs": self.pairs,
            "skipped": self.skipped,
        }


@dataclass
class SplitRecovery:
    time_hat: np.ndarray
    eligible: np.ndarray
    bound_max: float
    centers: list
    cell_of: np.ndarray
    dhat: np.ndarray
    sigma_hat: MatrixMetric | None
    missing_pairs: list
    map_check: MapCheck
    params: dict

    def to_dict(self) -> dict:
        eh = self.time_hat[self.eligible]
        return {
            "eligible": int(self.eligible.size),
            "time_hat": {"min": float(eh.min()), "max": float(eh.max())},
            "bound_max": self.bound_max,
            "centers": [list(c) if isinstance(c, tuple) else c for c in self.centers],
            "dhat": [[None if math.isnan(v) else v for v in row] for row in self.dhat.tolist()],
            "missing_pairs": self.missing_pairs,
            "map_check": self.map_check.to_dict(),
            "params": self.params,
        }


def _greedy_net(sigma, bases, radius: float):
    """First-come founders at pairwise distance > radius; nearest assignment."""
    centers = []
    for b in bases:
        if not centers or min(sigma.dist(b, c) for c in centers) > radius:
            centers.append(b)
    D = sigma.pairwise(bases, centers)
    return centers, np.argmin(D, axis=1), np.min(D, axis=1)


def recover_sigma(
    cs: CausalStructure,
    line,
    *,
    margin: float | None = None,
    slab: float | None = None,
    cell: float | None = None,
    core: float | None = None,
    pair_budget: int = 4_000,
    order_slack: float | None = None,
    metric_tol: float | None = None,
    tau_floor: float = 0.5,
    seed: int = 0,
) -> SplitRecovery:
    """Base metric and global time from separations alone.

    Events at least `margin` below the line top get a recovered time; fiber
    cells come from a greedy net at `cell` resolution, and each entry
    d_hat(x, y) is the smallest recovered-time gap over causal pairs between
    the tight cores of the two cells (the causal-cone characterization of
    the base distance).  Cell pairs with no causal pair fall back to full
    cell membership and are reported if still empty.
    """
    if not cs.has_coords() or cs.sigma is None:
        raise LorlenError("recovery needs a product-derived structure")
    lids = _line_ids(cs, line)
    top = int(lids[-1])
    T = float(cs.times[top])
    spacing = nn_spacing(cs)
    if cell is None:
        cell = 2.0 * spacing
    if core is None:
        core = max(0.5 * spacing, 0.25 * cell)
    core = min(core, cell)
    if margin is None:
        margin = cs.sigma.diameter + 2.0 * cell
    keep = cs.times <= T - margin
    if slab is not None:
        keep &= cs.times >= T - margin - slab
    eligible = np.flatnonzero(keep)
    if eligible.size < 2:
        raise LorlenError("no events far enough below the line top")

    values, bounds, _, valid = busemann_times(cs, line, eligible)
    if not valid.all():
        eligible = eligible[valid]
        values = values[valid]
        bounds = None if bounds is None else bounds[valid]
    bound_max = float(bounds.max()) if bounds is not None else 0.0

    time_hat = np.full(cs.n, np.nan)
    time_hat[eligible] = values
    for start in range(0, eligible.size, 512):
        rows = slice(start, min(start + 512, eligible.size))
        sub = cs.chron[np.ix_(eligible[rows], eligible)]
        gaps = values[None, :] - values[rows, None]
        if sub.any() and gaps[sub].min() <= 0.0:
            raise LorlenError("recovered time is not strictly increasing on a chron pair")

    bases = [cs.bases[e] for e in eligible]
    centers, cell_of, offset = _greedy_net(cs.sigma, bases, cell)
    k = len(centers)
    in_core = offset <= core
    core_idx = [np.flatnonzero((cell_of == x) & in_core) for x in range(k)]
    full_idx = [np.flatnonzero(cell_of == x) for x in range(k)]
    dhat = np.full((k, k), np.inf)
    missing = []
    for x in range(k):
        for y in range(k):
            if x == y:
                continue
            for ex, wy in ((core_idx[x], core_idx[y]), (full_idx[x], full_idx[y])):
                if ex.size == 0 or wy.size == 0:
                    continue
                C = cs.causal[np.ix_(eligible[ex], eligible[wy])]
                if C.any():
                    g = (values[wy][None, :] - values[ex][:, None])[C]
                    dhat[x, y] = float(g.min())
                    break
    dhat = np.minimum(dhat, dhat.T)
    np.fill_diagonal(dhat, 0.0)
    for x in range(k):
        for y in range(x + 1, k):
            if not np.isfinite(dhat[x, y]):
                missing.append([x, y])
                dhat[x, y] = dhat[y, x] = np.nan

    sigma_hat = None
    if not missing:
        tol = metric_tol if metric_tol is not None else 6.0 * cell + 3.0 * bound_max + 1e-9
        sigma_hat = MatrixMetric(list(centers), dhat, tol=tol)

    slack = order_slack if order_slack is not None else 2.0 * cell + 4.0 * bound_max
    rng = np.random.default_rng(seed)
    m = eligible.size
    ii = rng.integers(0, m, size=pair_budget)
    jj = rng.integers(0, m, size=pair_budget)
    worst = None
    disagree = ties = skipped = used = 0
    for i, j in zip(ii, jj):
        if i == j:
            skipped += 1
            continue
        dh = dhat[cell_of[i], cell_of[j]]
        if math.isnan(dh):
            skipped += 1
            continue
        used += 1
        e, w = int(eligible[i]), int(eligible[j])
        dt = values[j] - values[i]
        if abs(dt - dh) <= slack:
            ties += 1
        elif cs.causal[e, w] != (dt >= dh):
            disagree += 1
        if cs.causal[e, w] and cs.tau[e, w] >= tau_floor:
            tau_hat = math.sqrt(max(dt * dt - dh * dh, 0.0))
            err = abs(cs.tau[e, w] - tau_hat)
            if worst is None or err > worst:
                worst = err
    return SplitRecovery(
        time_hat=time_hat,
        eligible=eligible,
        bound_max=bound_max,
        centers=centers,
        cell_of=cell_of,
        dhat=dhat,
        sigma_hat=sigma_hat,
        missing_pairs=missing,
        map_check=MapCheck(
            worst_tau_error=worst,
            order_disagreements=disagree,
            ties=ties,
            pairs=used,
            skipped=skipped,
        ),
        params={
            "margin": float(margin),
            "cell": float(cell),
            "core": float(core),
            "slab": None if slab is None else float(slab),
            "order_slack": float(slack),
            "tau_floor": float(tau_floor),
            "line_top": T,
        },
    )


def dhat_relative_errors(recovery: SplitRecovery, sigma) -> np.ndarray:
    """Relative error of each off-diagonal entry against the true base metric."""
    out = []
    k = len(recovery.centers)
    for x in range(k):
        for y in range(x + 1, k):
            true = sigma.dist(recovery.centers[x], recovery.centers[y])
            if true > 0 and np.isfinite(recovery.dhat[x, y]):
                out.append(abs(recovery.dhat[x, y] - true) / true)
    return np.asarray(out)


def validate_split(
    recovery: SplitRecovery,
    quad_budget: int = 2_000,
    *,
    seed: int = 0,
    tol: float = 1e-6,
    axioms=None,
    line: LineSearchResult | None = None,
    certificate: TimelikeCertificate | None = None,
) -> dict:
    """Curvature of the recovered base plus every stage verdict in one report."""
    if recovery.sigma_hat is None:
        raise LorlenError("recovery incomplete: missing cell pairs, no base metric")
    curvature = quadruple_curvature_test(
        recovery.sigma_hat, n_random=quad_budget, seed=seed, tol=tol
    )
    verdicts = {"curvature": curvature.status == "pass"}
    if axioms is not None:
        verdicts["axioms"] = axioms.status == "pass"
    if line is not None:
        verdicts["line"] = line.found
    if certificate is not None:
        verdicts["timelike"] = certificate.timelike
        verdicts["boundary_singleton"] = certificate.boundary_classes == 1
    return {
        "status": "pass" if all(verdicts.values()) else "fail",
        "verdicts": verdicts,
        "curvature": curvature.to_dict(),
        "map_check": recovery.map_check.to_dict(),
        "recovery": recovery.to_dict(),
    }


def run_split(cfg: RunConfig) -> dict:
    """The whole pipeline for one config; returns the machine-readable report."""
    ps, cs, anchors, skipped = prepare_run(cfg)
    report: dict = {
        "config": cfg.spec(),
        "events": int(cs.n),
        "spacing": float(nn_spacing(cs)),
    }
    axioms = check_axioms(cs, triple_budget=cfg.axiom_budget, seed=cfg.seed)
    report["axioms"] = axioms.to_dict()
    try:
        line = pipeline_find_line(
            cs,
            anchors=anchors,
            cell=cfg.cell,
            slab=cfg.slab,
            line_tol=cfg.line_tol,
            skipped_windows=skipped,
        )
        report["line"] = line.to_dict()
    except NoLimitError as exc:
        line = None
        report["line"] = {"found": False, "error": str(exc), "skipped_windows": skipped}
    cert = certify_timelike(cs, line.chain if line else [])
    report["certificate"] = cert.to_dict()
    report["curves"] = {"window_growth": line.rows if line else []}
    if line is not None and line.found and cert.timelike:
        recovery = recover_sigma(
            cs,
            line.chain,
            margin=cfg.margin,
            slab=cfg.slab,
            cell=cfg.cell,
            core=cfg.core,
            pair_budget=cfg.pair_budget,
            order_slack=cfg.order_slack,
            metric_tol=cfg.metric_tol,
            seed=cfg.seed + 1,
        )
        report["validation"] = validate_split(
            recovery,
            cfg.quad_budget,
            seed=cfg.seed + 2,
            tol=cfg.curvature_tol,
            axioms=axioms,
            line=line,
            certificate=cert,
        )
        outcome = report["validation"]["status"]
    else:
        reason = "no line found" if line is None or not line.found else "line not certified timelike"
        report["validation"] = {
            "status": "fail",
            "skipped": reason,
            "boundary_classes": cert.boundary_classes,
        }
        outcome = "fail"
    report["status"] = outcome
    report["expect"] = cfg.expect
    return report


def maximizer_error_sweep(
    space: dict,
    densities,
    n_pairs: int = 50,
    tau_min: float = 1.0,
    seed: int = 0,
) -> list:
    """Maximizer value against the closed-form separation, per density.

    For each density the same seeded recipe draws causal pairs with table
    separation at least tau_min and records the relative shortfall of the
    longest link path; the rows feed the density-vs-error curve.
    """
    rows = []
    for density in densities:
        spec = dict(space, mode={"poisson": {"density": float(density)}}, seed=seed)
        ps, scfg = load_run_spec(spec)
        cs = build_causal_structure(ps, sprinkle(ps, scfg))
        links = compute_links(cs)
        rng = np.random.default_rng([seed, int(density)])
        errs = []
        tries = 0
        while len(errs) < n_pairs and tries < 200 * n_pairs:
            tries += 1
            a, b = (int(v) for v in rng.integers(0, cs.n, size=2))
            if a == b or not cs.causal[a, b] or cs.tau[a, b] < tau_min:
                continue
            value = maximizer(cs, a, b, links=links).value
            errs.append((cs.tau[a, b] - value) / cs.tau[a, b])
        if len(errs) < n_pairs:
            raise LorlenError(
                f"only {len(errs)} usable pairs at density {density}; deepen the window"
            )
        rows.append(
            {
                "density": float(density),
                "events": int(cs.n),
                "pairs": len(errs),
                "median_rel_error": float(np.median(errs)),
                "max_rel_error": float(np.max(errs)),
            }
        )
    return rows
