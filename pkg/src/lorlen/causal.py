"""Finite causal structures: strict chronological/causal order tables with time separation.

A structure holds dense boolean relation tables and a float time-separation
table over event indices 0..n-1.  Both relations are irreflexive throughout;
reflexivity is opt-in at query sites that need it.  Events may carry optional
product coordinates (a base point and a time), which downstream modules use
for closed-form checks and diagnostics.
"""

from __future__ import annotations

import graphlib
from dataclasses import dataclass, field
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import CausalCycleError, LorlenError

EventId = int
Relation = Literal["chron", "causal"]

# Exact transitivity/push-up checks use an O(n^3) boolean product; above this
# size check_axioms falls back to sampled triples.
_EXACT_TRIPLE_LIMIT = 800


@dataclass
class CausalStructure:
    """Events with strict relation tables.

    chron[i, j] is True iff event i chronologically precedes j; causal[i, j]
    iff i causally precedes j; tau[i, j] is the time separation (0 when the
    pair is not causally related, and also on null pairs).  Arrays are frozen
    after construction so shared read access is safe.
    """

    chron: np.ndarray
    causal: np.ndarray
    tau: np.ndarray
    bases: list | None = None
    times: np.ndarray | None = None
    sigma: object | None = None
    window: tuple[float, float] | None = None
    region: object | None = None
    closed: bool = True

    def __post_init__(self):
        n = self.chron.shape[0]
        for name in ("chron", "causal", "tau"):
            arr = getattr(self, name)
            if arr.shape != (n, n):
                raise LorlenError(f"{name} table must be square, got {arr.shape}")
        if self.times is not None:
            self.times = np.asarray(self.times, dtype=float)
        for arr in (self.chron, self.causal, self.tau, self.times):
            if arr is not None:
                arr.flags.writeable = False

    @property
    def n(self) -> int:
        return self.chron.shape[0]

    def has_coords(self) -> bool:
        return self.bases is not None and self.times is not None

    def coords(self, e: EventId) -> tuple[object, float]:
        if not self.has_coords():
            raise LorlenError("structure carries no coordinates")
        return self.bases[e], float(self.times[e])

    def base_dist(self, i, j) -> np.ndarray:
        """Base-space distance between events (requires coordinates and sigma)."""
        if self.sigma is None or self.bases is None:
            raise LorlenError("structure carries no base metric")
        i = np.atleast_1d(np.asarray(i, dtype=int))
        j = np.atleast_1d(np.asarray(j, dtype=int))
        p = [self.bases[k] for k in i]
        q = [self.bases[k] for k in j]
        return self.sigma.pairwise(p, q)

    def d_metric(self, i: EventId, j: EventId) -> float:
        """Symmetric product distance sqrt(dt^2 + d^2) between two events."""
        d = float(self.base_dist([i], [j])[0, 0])
        dt = float(self.times[i] - self.times[j])
        return float(np.hypot(dt, d))


@dataclass(frozen=True)
class AxiomViolation:
    axiom: str
    witness: tuple
    slack: float | None = None

    def to_dict(self) -> dict:
        return {"axiom": self.axiom, "witness": list(self.witness), "slack": self.slack}


@dataclass
class AxiomReport:
    violations: list[AxiomViolation] = field(default_factory=list)
    checks: dict[str, int] = field(default_factory=dict)
    worst_triangle_slack: float = 0.0

    @property
    def status(self) -> str:
        return "pass" if not self.violations else "fail"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "checks": dict(sorted(self.checks.items())),
            "worst_triangle_slack": self.worst_triangle_slack,
            "violations": [v.to_dict() for v in self.violations],
        }


def build_closure(n_events: int, edges: Iterable[tuple[int, int, float]]) -> CausalStructure:
    """Close generating relations transitively and derive the tau table.

    Each generator (u, v, w) makes u causally precede v; w > 0 additionally
    makes the pair chronological.  Time separation on non-generator pairs is
    the maximum over chains of summed generator weights, so the reverse
    triangle inequality holds by construction and tau > 0 exactly on
    chronological pairs.  A directed cycle raises CausalCycleError with the
    witness cycle.
    """
    n = int(n_events)
    weight: dict[tuple[int, int], float] = {}
    for u, v, w in edges:
        u, v, w = int(u), int(v), float(w)
        if not (0 <= u < n and 0 <= v < n):
            raise LorlenError(f"edge ({u}, {v}) outside event range 0..{n - 1}")
        if w < 0:
            raise LorlenError(f"negative tau weight on edge ({u}, {v})")
        if u == v:
            raise CausalCycleError([u, u])
        key = (u, v)
        weight[key] = max(weight.get(key, 0.0), w)

    succ: dict[int, list[int]] = {u: [] for u in range(n)}
    for (u, v) in weight:
        succ[u].append(v)

    ts = graphlib.TopologicalSorter({u: [] for u in range(n)})
    for (u, v) in weight:
        ts.add(v, u)
    try:
        order = list(ts.static_order())
    except graphlib.CycleError as exc:
        raise CausalCycleError(exc.args[1]) from None

    causal = np.zeros((n, n), dtype=bool)
    tau = np.zeros((n, n), dtype=float)
    for u in reversed(order):
        for v in succ[u]:
            w = weight[(u, v)]
            reach = causal[v].copy()
            reach[v] = True
            causal[u] |= reach
            cand = np.where(reach, w + tau[v], 0.0)
            np.maximum(tau[u], cand, out=tau[u])
    chron = tau > 0.0
    return CausalStructure(chron=chron, causal=causal, tau=tau, closed=True)


def _sample_triples(cs: CausalStructure, budget: int, rng: np.random.Generator):
    """Sample causally ordered triples i <= j <= k, grouped through middles."""
    n = cs.n
    out_i, out_j, out_k = [], [], []
    mids = rng.integers(0, n, size=budget)
    uniq, counts = np.unique(mids, return_counts=True)
    for j, c in zip(uniq, counts):
        preds = np.flatnonzero(cs.causal[:, j])
        succs = np.flatnonzero(cs.causal[j])
        if preds.size == 0 or succs.size == 0:
            continue
        out_i.append(preds[rng.integers(0, preds.size, size=c)])
        out_j.append(np.full(c, j, dtype=int))
        out_k.append(succs[rng.integers(0, succs.size, size=c)])
    if not out_i:
        return (np.empty(0, int),) * 3
    return np.concatenate(out_i), np.concatenate(out_j), np.concatenate(out_k)


def check_axioms(
    cs: CausalStructure,
    tol: float = 1e-9,
    *,
    triple_budget: int = 100_000,
    max_witnesses: int = 5,
    seed: int = 0,
) -> AxiomReport:
    """Verify the ordering axioms and report the first few violations of each.

    Checks irreflexivity, antisymmetry of chron, chron within causal, tau
    positivity exactly on chronological pairs, the reverse triangle
    inequality with slack >= -tol, transitivity and push-up.  Triple-based
    axioms are exact up to a size cutoff and sampled (seeded) beyond it.
    """
    rep = AxiomReport()
    n = cs.n

    def record(axiom, witnesses, slack=None):
        for w in witnesses[:max_witnesses]:
            rep.violations.append(AxiomViolation(axiom, tuple(int(x) for x in w), slack))

    diag = np.arange(n)
    bad = diag[cs.chron[diag, diag] | cs.causal[diag, diag]]
    record("irreflexive", [(i,) for i in bad])
    rep.checks["irreflexive"] = n

    both = np.argwhere(cs.chron & cs.chron.T)
    record("chron-antisymmetric", [tuple(p) for p in both if p[0] < p[1]])
    rep.checks["chron-antisymmetric"] = n * n

    outside = np.argwhere(cs.chron & ~cs.causal)
    record("chron-within-causal", [tuple(p) for p in outside])
    rep.checks["chron-within-causal"] = n * n

    mismatch = np.argwhere((cs.tau > 0) != cs.chron)
    record("tau-iff-chron", [tuple(p) for p in mismatch])
    rep.checks["tau-iff-chron"] = n * n

    rng = np.random.default_rng(seed)
    if n <= _EXACT_TRIPLE_LIMIT:
        c32 = cs.causal.astype(np.float32)
        h32 = cs.chron.astype(np.float32)
        comp_cc = (c32 @ c32) > 0.5
        record("transitive", [tuple(p) for p in np.argwhere(comp_cc & ~cs.causal)])
        comp_ch = (c32 @ h32) > 0.5
        comp_hc = (h32 @ c32) > 0.5
        push_bad = (comp_ch | comp_hc) & ~cs.chron
        record("push-up", [tuple(p) for p in np.argwhere(push_bad)])
        rep.checks["transitive"] = rep.checks["push-up"] = n * n * n

        worst = 0.0
        tri_bad = []
        for j in range(n):
            preds = np.flatnonzero(cs.causal[:, j])
            succs = np.flatnonzero(cs.causal[j])
            if preds.size == 0 or succs.size == 0:
                continue
            slack = cs.tau[np.ix_(preds, succs)] - cs.tau[preds, j][:, None] - cs.tau[j, succs][None, :]
            m = float(slack.min())
            worst = min(worst, m)
            if m < -tol:
                for a, b in np.argwhere(slack < -tol)[:max_witnesses]:
                    tri_bad.append(((preds[a], j, succs[b]), float(slack[a, b])))
        for w, s in tri_bad[:max_witnesses]:
            rep.violations.append(AxiomViolation("reverse-triangle", w, s))
        rep.worst_triangle_slack = worst
        rep.checks["reverse-triangle"] = n * n * n
    else:
        ii, jj, kk = _sample_triples(cs, triple_budget, rng)
        rep.checks["transitive"] = rep.checks["push-up"] = rep.checks["reverse-triangle"] = int(ii.size)
        if ii.size:
            trans_bad = ~cs.causal[ii, kk]
            record("transitive", list(zip(ii[trans_bad], jj[trans_bad], kk[trans_bad])))
            pu = (cs.chron[ii, jj] | cs.chron[jj, kk]) & ~cs.chron[ii, kk]
            record("push-up", list(zip(ii[pu], jj[pu], kk[pu])))
            slack = cs.tau[ii, kk] - cs.tau[ii, jj] - cs.tau[jj, kk]
            rep.worst_triangle_slack = float(slack.min())
            bad = slack < -tol
            for idx in np.flatnonzero(bad)[:max_witnesses]:
                rep.violations.append(
                    AxiomViolation(
                        "reverse-triangle",
                        (int(ii[idx]), int(jj[idx]), int(kk[idx])),
                        float(slack[idx]),
                    )
                )
    return rep


def _table(cs: CausalStructure, kind: Relation) -> np.ndarray:
    if kind == "chron":
        return cs.chron
    if kind == "causal":
        return cs.causal
    raise LorlenError(f"unknown relation kind {kind!r}")


def past(cs: CausalStructure, events: Sequence[EventId] | EventId, kind: Relation = "chron") -> np.ndarray:
    """Strict past of an event set: all x related-before some member."""
    ids = np.atleast_1d(np.asarray(events, dtype=int))
    mask = _table(cs, kind)[:, ids].any(axis=1)
    return np.flatnonzero(mask)


def future(cs: CausalStructure, events: Sequence[EventId] | EventId, kind: Relation = "chron") -> np.ndarray:
    """Strict future of an event set."""
    ids = np.atleast_1d(np.asarray(events, dtype=int))
    mask = _table(cs, kind)[ids, :].any(axis=0)
    return np.flatnonzero(mask)


def past_set(cs: CausalStructure, events, kind: Relation = "chron") -> np.ndarray:
    """Past-closed set generated by the seed: seed union strict past.

    Unlike the strict past this is idempotent on finite structures.
    """
    ids = np.atleast_1d(np.asarray(events, dtype=int))
    return np.union1d(ids, past(cs, ids, kind))


def is_chain(cs: CausalStructure, events: Sequence[EventId], kind: Relation = "causal") -> bool:
    """True iff the sequence is strictly increasing under the relation."""
    t = _table(cs, kind)
    return all(t[a, b] for a, b in zip(events, events[1:]))


def diamond(
    cs: CausalStructure,
    a: EventId,
    b: EventId,
    kind: Relation = "causal",
    include_endpoints: bool = False,
) -> np.ndarray:
    """Order interval between a and b: events strictly between them.

    With include_endpoints, a and b are added when a precedes b (or a == b).
    """
    t = _table(cs, kind)
    between = np.flatnonzero(t[a, :] & t[:, b])
    if include_endpoints and (t[a, b] or a == b):
        between = np.union1d(between, [a, b])
    return between


def diamond_diameter(cs: CausalStructure, a: EventId, b: EventId, kind: Relation = "causal") -> float | None:
    """Symmetric-distance diameter of the interval; None without coordinates.

    Desk-scale compactness diagnostic: finite structures always report a
    finite number.
    """
    if not cs.has_coords() or cs.sigma is None:
        return None
    ids = diamond(cs, a, b, kind, include_endpoints=True)
    if ids.size == 0:
        return 0.0
    pts = [cs.bases[i] for i in ids]
    d = cs.sigma.pairwise(pts, pts)
    dt = cs.times[ids][:, None] - cs.times[ids][None, :]
    return float(np.sqrt(dt * dt + d * d).max())
