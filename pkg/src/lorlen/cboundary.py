"""Ideal-point machinery on truncated structures.

Pasts of chronological chains stand in for indecomposable past sets: finite
samples are not chronologically dense, so the chain-generated form is the
robust one.  A bulk/horizon split (bulk = events below the top of the window
by a margin) separates genuine interior behaviour from truncation artifacts:
terminal events near the top or the region boundary represent inextensible
chains, and their pasts are compared on the bulk only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .causal import CausalStructure, is_chain
from .errors import EmptyHorizonError, LorlenError
from .geodesy import Chain
from .product import BandRegion, DiamondRegion, FullRegion, nn_spacing


def _events(chain) -> list:
    if isinstance(chain, Chain):
        return list(chain.events)
    return [int(e) for e in chain]


@dataclass
class PastSet:
    """Past of a future-directed chronological chain."""

    members: frozenset
    generator: tuple
    classification: "Classification | None" = None


@dataclass
class FutureSet:
    """Future of a chain, generator stored in past-directed order."""

    members: frozenset
    generator: tuple
    classification: "Classification | None" = None


@dataclass(frozen=True)
class Classification:
    kind: str  # "PIP" | "TIP" | "undetermined"
    event: int | None = None


def generate_IP(cs: CausalStructure, chain) -> PastSet:
    """Union of the strict pasts of the chain members."""
    ev = _events(chain)
    if len(ev) > 1 and not is_chain(cs, ev, kind="chron"):
        raise LorlenError("generators must be chronological chains")
    if not ev:
        return PastSet(members=frozenset(), generator=())
    mask = cs.chron[:, ev].any(axis=1)
    return PastSet(members=frozenset(map(int, np.flatnonzero(mask))), generator=tuple(ev))


def generate_IF(cs: CausalStructure, chain) -> FutureSet:
    """Future of a chain; the generator is recorded descending toward it."""
    ev = _events(chain)
    if len(ev) > 1 and not is_chain(cs, ev, kind="chron"):
        raise LorlenError("generators must be chronological chains")
    if not ev:
        return FutureSet(members=frozenset(), generator=())
    mask = cs.chron[ev, :].any(axis=0)
    return FutureSet(
        members=frozenset(map(int, np.flatnonzero(mask))), generator=tuple(reversed(ev))
    )


def _bulk_mask(cs: CausalStructure, bulk) -> np.ndarray:
    mask = np.zeros(cs.n, dtype=bool)
    mask[np.asarray(sorted(int(e) for e in bulk), dtype=int)] = True
    return mask


def classify(cs: CausalStructure, ip: PastSet, bulk) -> Classification:
    """Decide whether a past is that of a bulk event or a terminal one.

    A bulk event whose whole past equals the members wins (smallest id on
    ties); otherwise a generator escaping the bulk marks a terminal set.
    """
    mask = _bulk_mask(cs, bulk)
    want = np.zeros(cs.n, dtype=bool)
    if ip.members:
        want[sorted(ip.members)] = True
    ids = np.flatnonzero(mask)
    if ids.size:
        hits = ids[(cs.chron[:, ids] == want[:, None]).all(axis=0)]
        if hits.size:
            out = Classification(kind="PIP", event=int(hits[0]))
            ip.classification = out
            return out
    if ip.generator and not mask[ip.generator[-1]]:
        out = Classification(kind="TIP")
    else:
        out = Classification(kind="undetermined")
    ip.classification = out
    return out


def up_set(cs: CausalStructure, past) -> frozenset:
    """Events chronologically after every member (all events when empty)."""
    members = past.members if isinstance(past, PastSet) else frozenset(past)
    if not members:
        return frozenset(range(cs.n))
    rows = sorted(members)
    mask = cs.chron[rows, :].all(axis=0)
    return frozenset(map(int, np.flatnonzero(mask)))


def down_set(cs: CausalStructure, future) -> frozenset:
    """Events chronologically before every member (all events when empty)."""
    members = future.members if isinstance(future, FutureSet) else frozenset(future)
    if not members:
        return frozenset(range(cs.n))
    cols = sorted(members)
    mask = cs.chron[:, cols].all(axis=1)
    return frozenset(map(int, np.flatnonzero(mask)))


@dataclass(frozen=True)
class CompletionPair:
    P: PastSet | None
    F: FutureSet | None


def _dedupe(sets):
    seen = {}
    for s in sets:
        if s.members not in seen:
            seen[s.members] = s
    return list(seen.values())


def s_relation_pairs(cs: CausalStructure, ips, ifs) -> list:
    """Mutually maximal (past, future) pairs, terminals alone paired with ∅.

    F must be inclusion-maximal among the given futures inside the common
    future of P, and P maximal among the pasts inside the common past of F.
    Several maximal partners produce several pairs; ties are left visible.
    """
    ips = _dedupe(ips)
    ifs = _dedupe(ifs)
    ups = {id(p): up_set(cs, p) for p in ips}
    downs = {id(f): down_set(cs, f) for f in ifs}

    def maximal(cands, bound, pool):
        inside = [c for c in cands if c.members and c.members <= bound]
        return [
            c
            for c in inside
            if not any(c.members < o.members for o in inside)
        ]

    pairs = []
    matched_p, matched_f = set(), set()
    for p in ips:
        fs = maximal(ifs, ups[id(p)], ifs)
        for f in fs:
            ps = maximal(ips, downs[id(f)], ips)
            if any(q.members == p.members for q in ps):
                pairs.append(CompletionPair(P=p, F=f))
                matched_p.add(id(p))
                matched_f.add(id(f))
    for p in ips:
        if id(p) not in matched_p and p.classification and p.classification.kind == "TIP":
            pairs.append(CompletionPair(P=p, F=None))
    for f in ifs:
        if id(f) not in matched_f and f.classification and f.classification.kind == "TIP":
            pairs.append(CompletionPair(P=None, F=f))
    return pairs


def limit_operator(cs: CausalStructure, sequence, candidate, tail: str = "constant") -> bool:
    """Finite liminf/limsup test for a candidate past.

    tail="constant" extends the sequence by repeating its last member, so
    both limits equal that member.  tail="periodic" cycles the whole
    sequence, giving intersection and union.  The candidate must sit inside
    the lower limit and be maximal among the appearing pasts inside the
    upper one.
    """
    seqs = [set(s.members if isinstance(s, PastSet) else s) for s in sequence]
    if not seqs:
        raise LorlenError("need a non-empty sequence of past sets")
    cand = set(candidate.members if isinstance(candidate, PastSet) else candidate)
    if tail == "constant":
        li = ls = seqs[-1]
    elif tail == "periodic":
        li = set.intersection(*seqs)
        ls = set.union(*seqs)
    else:
        raise LorlenError(f"unknown tail convention {tail!r}")
    if not cand <= li:
        return False
    pool = [s for s in seqs if s != cand]
    if not cand <= ls:
        return False
    return not any(cand < q <= ls for q in pool)


@dataclass
class TauBarResult:
    value: float
    unbounded: bool = False
    monotone: bool = True
    values: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "value": "unbounded" if self.unbounded else self.value,
            "last": self.value,
            "monotone": self.monotone,
            "steps": self.values,
        }


def tau_bar(
    cs: CausalStructure,
    pair1: CompletionPair,
    pair2: CompletionPair,
    slope_threshold: float = 0.5,
) -> TauBarResult:
    """Separation between completion pairs along their recorded generators.

    Walks tau from the descending generator of the first future set to the
    ascending generator of the second past set; the sequence is monotone and
    its last value is the finite estimate.  Linear growth against the
    generators' time span marks the value unbounded.  An absent side gives
    zero.
    """
    if pair1.F is None or pair2.P is None:
        return TauBarResult(value=0.0)
    ys = list(pair1.F.generator)
    xs = list(pair2.P.generator)
    if not ys or not xs:
        return TauBarResult(value=0.0)
    k = max(len(ys), len(xs))
    vals = []
    for i in range(k):
        y = ys[min(i, len(ys) - 1)]
        x = xs[min(i, len(xs) - 1)]
        vals.append(float(cs.tau[y, x]))
    monotone = all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))
    unbounded = False
    if len(vals) >= 3:
        mid = len(vals) // 2
        growth = vals[-1] - vals[mid]
        if cs.has_coords():
            y_mid, y_end = ys[min(mid, len(ys) - 1)], ys[-1]
            x_mid, x_end = xs[min(mid, len(xs) - 1)], xs[-1]
            span = (cs.times[x_end] - cs.times[x_mid]) + (
                cs.times[y_mid] - cs.times[y_end]
            )
        else:
            span = float(len(vals) - 1 - mid)
        if span > 0 and growth / span >= slope_threshold:
            unbounded = True
    return TauBarResult(value=vals[-1], unbounded=unbounded, monotone=monotone, values=vals)


@dataclass
class BoundaryClass:
    bulk_past: frozenset
    terminals: list
    representatives: list

    def to_dict(self) -> dict:
        return {
            "bulk_past_size": len(self.bulk_past),
            "terminals": list(self.terminals),
            "representatives": [list(c) for c in self.representatives],
        }


def _auto_margin(cs: CausalStructure) -> float:
    if cs.sigma is None or not cs.has_coords():
        raise LorlenError("automatic margin needs a product-derived structure")
    return cs.sigma.diameter + 3.0 * nn_spacing(cs)


def _terminal_mask(cs: CausalStructure) -> np.ndarray:
    return ~cs.chron.any(axis=1)


def _representative_chain(cs: CausalStructure, terminal: int, max_len: int = 64) -> tuple:
    chain = [terminal]
    while len(chain) < max_len:
        preds = np.flatnonzero(cs.chron[:, chain[0]])
        if preds.size == 0:
            break
        best = preds[np.lexsort((preds, -cs.times[preds]))][0] if cs.has_coords() else preds[-1]
        chain.insert(0, int(best))
    return tuple(chain)


def future_boundary_classes(
    cs: CausalStructure,
    margin: float | str = "auto",
    top: float | None = None,
    max_representatives: int = 3,
) -> list:
    """Group inextensible future directions by their past on the bulk.

    Terminal events (no chronological successor) inside the top slab or
    within it of the region boundary are the chain endpoints; classes are
    the distinct bulk-restricted pasts.  The margin must leave a non-empty
    bulk, and at least one terminal must reach the slab.
    """
    if not cs.has_coords():
        raise LorlenError("boundary classes need a product-derived structure")
    spacing = nn_spacing(cs)
    if margin == "auto":
        margin = _auto_margin(cs)
    t_top = cs.window[1] if cs.window is not None else float(cs.times.max())
    slab_h = 1.5 * spacing
    if top is None:
        top = t_top - slab_h
    bulk = cs.times <= t_top - margin
    if not bulk.any():
        raise LorlenError(f"margin {margin:.4g} leaves no bulk event")
    in_slab = cs.times >= top
    if cs.region is not None and not isinstance(cs.region, FullRegion):
        slack = cs.region.slack(list(cs.bases), cs.times, cs.sigma, cs.window)
        in_slab = in_slab | (np.asarray(slack) <= slab_h)
    terminals = np.flatnonzero(_terminal_mask(cs) & in_slab)
    if terminals.size == 0:
        raise EmptyHorizonError("no inextensible chain reaches the top slab")
    groups: dict = {}
    for e in map(int, terminals):
        key = frozenset(map(int, np.flatnonzero(cs.chron[:, e] & bulk)))
        groups.setdefault(key, []).append(e)
    classes = []
    for key, evs in groups.items():
        reps = [_representative_chain(cs, e) for e in evs[:max_representatives]]
        classes.append(BoundaryClass(bulk_past=key, terminals=evs, representatives=reps))
    classes.sort(key=lambda c: (-len(c.bulk_past), c.terminals[0]))
    return classes


def _reverse_region(region):
    if region is None or isinstance(region, FullRegion):
        return region
    if isinstance(region, BandRegion):
        return BandRegion(lo=-region.hi, hi=-region.lo)
    if isinstance(region, DiamondRegion):
        return DiamondRegion(
            bottom=(region.top[0], -region.top[1]),
            top=(region.bottom[0], -region.bottom[1]),
        )
    raise LorlenError(f"cannot reverse region {region!r}")


def reverse_structure(cs: CausalStructure) -> CausalStructure:
    """Time-reversed copy sharing event ids."""
    return CausalStructure(
        chron=cs.chron.T.copy(),
        causal=cs.causal.T.copy(),
        tau=cs.tau.T.copy(),
        bases=cs.bases,
        times=None if cs.times is None else -cs.times,
        sigma=cs.sigma,
        window=None if cs.window is None else (-cs.window[1], -cs.window[0]),
        region=_reverse_region(cs.region),
        closed=cs.closed,
    )


def past_boundary_classes(cs: CausalStructure, **kwargs) -> list:
    """Future classes of the time reversal, chains past-directed."""
    classes = future_boundary_classes(reverse_structure(cs), **kwargs)
    for c in classes:
        c.representatives = [tuple(ch) for ch in c.representatives]
    return classes


@dataclass
class ConvergenceReport:
    precondition_ok: bool
    found: bool
    event: int | None = None
    tail_gap: float | None = None
    escaped: bool = False
    chron_witness: tuple | None = None
    candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "precondition_ok": self.precondition_ok,
            "found": self.found,
            "event": self.event,
            "tail_gap": self.tail_gap,
            "escaped": self.escaped,
            "chron_witness": list(self.chron_witness) if self.chron_witness else None,
            "candidates": self.candidates,
        }


def check_chain_convergence(cs: CausalStructure, chain, cell: float | None = None) -> ConvergenceReport:
    """Look for a sample event carrying the past of a jump-free causal chain.

    The chain must be causal with no internal chronological pair; a pair is
    reported as a precondition violation.  A match is an event whose whole
    past equals the chain's, within one cell of the chain's end.  A chain
    whose end sits against the region boundary escapes the space, so no
    interior point can represent it.
    """
    ev = _events(chain)
    if not ev:
        raise LorlenError("empty chain")
    if not is_chain(cs, ev, kind="causal") and len(ev) > 1:
        raise LorlenError("input must be a causal chain")
    sub = np.asarray(ev, dtype=int)
    ch = cs.chron[np.ix_(sub, sub)]
    bad = np.argwhere(ch)
    if bad.size:
        i, j = bad[0]
        return ConvergenceReport(
            precondition_ok=False, found=False, chron_witness=(int(sub[i]), int(sub[j]))
        )
    if cell is None:
        cell = 2.0 * nn_spacing(cs) if cs.has_coords() and cs.sigma is not None else 0.0
    want = cs.chron[:, sub].any(axis=1)
    hits = np.flatnonzero((cs.chron == want[:, None]).all(axis=0))
    last = int(sub[-1])
    escaped = False
    if cs.region is not None and cs.sigma is not None and cs.has_coords():
        slack = cs.region.slack([cs.bases[last]], cs.times[[last]], cs.sigma, cs.window)
        escaped = bool(np.isfinite(slack[0]) and slack[0] <= cell)
    if hits.size == 0:
        return ConvergenceReport(precondition_ok=True, found=False, escaped=escaped)
    if cs.has_coords() and cs.sigma is not None:
        gaps = [
            float(
                np.hypot(
                    cs.times[h] - cs.times[last],
                    cs.sigma.dist(cs.bases[h], cs.bases[last]),
                )
            )
            for h in hits
        ]
    else:
        gaps = [0.0 if int(h) == last else np.inf for h in hits]
    order = int(np.argmin(gaps))
    best, gap = int(hits[order]), float(gaps[order])
    found = gap <= cell and not escaped
    return ConvergenceReport(
        precondition_ok=True,
        found=found,
        event=best if found else None,
        tail_gap=gap,
        escaped=escaped,
        candidates=[int(h) for h in hits],
    )


@dataclass
class InclusionReport:
    converged: bool
    reached_top: bool
    ok: bool
    exceptions: list = field(default_factory=list)
    checked: int = 0

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "reached_top": self.reached_top,
            "ok": self.ok,
            "exceptions": self.exceptions,
            "checked": self.checked,
        }


def check_vertical_past_inclusion(
    cs: CausalStructure,
    chain,
    x0,
    margin: float | str = "auto",
    cell: float | None = None,
) -> InclusionReport:
    """Bulk past of the fiber under the chain's top must sit inside the chain's past.

    The chain's bases must settle at x0 within a cell and its times must
    reach the top slab; failures are flagged, not raised.  The fiber past is
    the closed-form cone below (x0, final chain time), restricted to bulk.
    """
    if not cs.has_coords() or cs.sigma is None:
        raise LorlenError("the inclusion check needs a product-derived structure")
    ev = _events(chain)
    if len(ev) > 1 and not is_chain(cs, ev, kind="chron"):
        raise LorlenError("input must be a chronological chain")
    spacing = nn_spacing(cs)
    if cell is None:
        cell = 2.0 * spacing
    if margin == "auto":
        margin = _auto_margin(cs)
    t_top = cs.window[1] if cs.window is not None else float(cs.times.max())
    tail = ev[max(0, len(ev) - 3) :]
    dists = [cs.sigma.dist(cs.bases[e], x0) for e in tail]
    converged = dists[-1] <= cell and dists[-1] <= dists[0] + 1e-12
    reached_top = cs.times[ev[-1]] >= t_top - 1.5 * spacing
    t_cut = float(cs.times[ev[-1]])
    sub = np.asarray(ev, dtype=int)
    chain_past = cs.chron[:, sub].any(axis=1)
    bulk = cs.times <= t_top - margin
    d_to_fiber = np.array([cs.sigma.dist(b, x0) for b in cs.bases])
    fiber_past = (t_cut - cs.times) > d_to_fiber
    exceptions = [int(e) for e in np.flatnonzero(fiber_past & bulk & ~chain_past)]
    checked = int((fiber_past & bulk).sum())
    return InclusionReport(
        converged=bool(converged),
        reached_top=bool(reached_top),
        ok=converged and reached_top and not exceptions,
        exceptions=exceptions,
        checked=checked,
    )


@dataclass
class CoverageReport:
    fraction: float
    missing: list
    margin: float
    line_top: float

    @property
    def covers(self) -> bool:
        return self.fraction == 1.0

    def to_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "missing": self.missing,
            "margin": self.margin,
            "line_top": self.line_top,
            "covers": self.covers,
        }


def check_vertical_past_covers(
    cs: CausalStructure, b, margin: float | str = "auto"
) -> CoverageReport:
    """Fraction of the bulk below the cone of the fiber at base point b.

    The fiber is truncated where the region cuts it; an event is covered
    when the truncated fiber top is later than its time by more than the
    base distance.  On an unbounded-width product with margin above the base
    diameter this is every bulk event.
    """
    if not cs.has_coords() or cs.sigma is None:
        raise LorlenError("the coverage check needs a product-derived structure")
    if margin == "auto":
        margin = _auto_margin(cs)
    t_top = cs.window[1] if cs.window is not None else float(cs.times.max())
    line_top = t_top
    if isinstance(cs.region, BandRegion):
        line_top = min(line_top, cs.region.hi)
    elif isinstance(cs.region, DiamondRegion):
        line_top = cs.region.top[1] - cs.sigma.dist(b, cs.region.top[0])
    bulk = np.flatnonzero(cs.times <= t_top - margin)
    if bulk.size == 0:
        raise LorlenError(f"margin {margin:.4g} leaves no bulk event")
    covered = []
    missing = []
    for e in map(int, bulk):
        if line_top - cs.times[e] > cs.sigma.dist(cs.bases[e], b):
            covered.append(e)
        else:
            missing.append(e)
    frac = len(covered) / bulk.size
    return CoverageReport(fraction=frac, missing=missing, margin=float(margin), line_top=float(line_top))
