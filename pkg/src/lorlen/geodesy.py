"""Discrete geodesics: tau-weighted maximizers, lines, limit extraction.

Chains step along links (relation pairs with empty open interval), so a
maximizer is the longest tau-weighted link path inside the order interval of
its endpoints.  By the reverse triangle inequality its value never exceeds
the table separation of the endpoints, and on exact grids the vertical fiber
chain is optimal with value equal to the time height.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .causal import CausalStructure, EventId, Relation, _table, diamond, is_chain
from .errors import LorlenError, NoLimitError, NotRelatedError
from .product import nn_spacing


@dataclass(frozen=True)
class Chain:
    events: tuple[int, ...]
    kind: str = "causal"
    length: float = 0.0

    def __len__(self):
        return len(self.events)

    def to_dict(self) -> dict:
        return {"events": list(self.events), "length": self.length, "kind": self.kind}


def chain_tau_length(cs: CausalStructure, events) -> float:
    """Sum of consecutive time separations along a valid chain."""
    ev = list(events)
    if len(ev) < 2:
        return 0.0
    if not is_chain(cs, ev, kind="causal"):
        raise LorlenError("not a causal chain")
    ev = np.asarray(ev, dtype=int)
    return float(cs.tau[ev[:-1], ev[1:]].sum())


def compute_links(cs: CausalStructure, kind: Relation = "causal") -> np.ndarray:
    """Pairs with empty open order interval (the covering relation)."""
    rel = _table(cs, kind)
    r32 = rel.astype(np.float32)
    composite = (r32 @ r32) > 0.5
    return rel & ~composite


def maximizer(
    cs: CausalStructure,
    a: EventId,
    b: EventId,
    kind: Relation = "causal",
    links: np.ndarray | None = None,
) -> "MaximizerResult":
    """Longest tau-weighted link path from a to b inside their interval.

    Ties in value are counted exactly and broken toward the lexicographically
    smallest event-id sequence.  Unrelated endpoints raise NotRelatedError.
    """
    rel = _table(cs, kind)
    if a == b or not rel[a, b]:
        raise NotRelatedError(f"events {a} and {b} are not related under {kind}")
    nodes = diamond(cs, a, b, kind=kind, include_endpoints=True)
    sub = np.asarray(nodes, dtype=int)
    pos = {int(e): i for i, e in enumerate(sub)}
    if links is None:
        rel_sub = rel[np.ix_(sub, sub)]
        r32 = rel_sub.astype(np.float32)
        link_sub = rel_sub & ~((r32 @ r32) > 0.5)
    else:
        link_sub = links[np.ix_(sub, sub)]
    tau_sub = cs.tau[np.ix_(sub, sub)]
    m = sub.size
    # in-degree under a closed relation is a topological key
    order = np.argsort(rel[np.ix_(sub, sub)].sum(axis=0), kind="stable")
    bi = pos[int(b)]
    value = np.full(m, -np.inf)
    count = [0] * m
    value[bi] = 0.0
    count[bi] = 1
    for vi in reversed(order):
        if vi == bi:
            continue
        succs = np.flatnonzero(link_sub[vi])
        if succs.size == 0:
            continue
        cand = tau_sub[vi, succs] + value[succs]
        best = cand.max()
        if best == -np.inf:
            continue
        value[vi] = best
        count[vi] = sum(count[s] for s, c in zip(succs, cand) if c == best)
    ai = pos[int(a)]
    if not np.isfinite(value[ai]):
        raise NotRelatedError(f"no link path from {a} to {b}")
    path = [ai]
    while path[-1] != bi:
        vi = path[-1]
        succs = np.flatnonzero(link_sub[vi])
        opts = [s for s in succs if tau_sub[vi, s] + value[s] == value[vi]]
        path.append(min(opts, key=lambda s: int(sub[s])))
    events = tuple(int(sub[i]) for i in path)
    return MaximizerResult(
        value=float(value[ai]),
        chain=Chain(events=events, kind=kind, length=float(value[ai])),
        tie_count=int(count[ai]),
    )


@dataclass(frozen=True)
class MaximizerResult:
    value: float
    chain: Chain
    tie_count: int


def line_defect(cs: CausalStructure, events) -> float:
    """Worst gap between a sub-chain sum and the pair's table separation."""
    ev = np.asarray(list(events), dtype=int)
    if ev.size < 2:
        return 0.0
    steps = cs.tau[ev[:-1], ev[1:]]
    prefix = np.concatenate([[0.0], np.cumsum(steps)])
    seg = prefix[None, :] - prefix[:, None]
    gap = np.abs(cs.tau[np.ix_(ev, ev)] - seg)
    iu = np.triu_indices(ev.size, k=1)
    return float(gap[iu].max())


def is_line(cs: CausalStructure, events, tol: float = 1e-9) -> bool:
    """True iff every pair of chain events realizes the table separation.

    The chain must be chronological; each internal segment sum must agree
    with tau between its endpoints within tol.
    """
    ev = list(events)
    if not is_chain(cs, ev, kind="chron"):
        raise LorlenError("line candidates must be chronological chains")
    return line_defect(cs, ev) <= tol


@dataclass
class LimitLine:
    chain: Chain
    cell: float
    slabs: list = field(default_factory=list)
    max_dispersion: float = 0.0
    null_steps: int = 0
    stitch_drops: int = 0
    boundary_hug: bool = False

    def to_dict(self) -> dict:
        return {
            "chain": self.chain.to_dict(),
            "cell": self.cell,
            "max_dispersion": self.max_dispersion,
            "null_steps": self.null_steps,
            "stitch_drops": self.stitch_drops,
            "boundary_hug": self.boundary_hug,
            "slabs": self.slabs,
        }


def extract_limit_line(
    cs: CausalStructure,
    chains,
    cell: float | None = None,
    slab: float | None = None,
    dispersion_factor: float = 3.0,
) -> LimitLine:
    """Stitch the cells the maximizer family keeps visiting into one chain.

    The overlapping time range of the family is cut into slabs; in each slab
    the base-space cell visited by the most chains wins, with a
    representative event from the latest chain that visits it.  Scattered
    families (winning cell below half the family, or dispersion past
    dispersion_factor * cell in most slabs) raise NoLimitError.
    """
    if not cs.has_coords():
        raise LorlenError("limit extraction needs coordinates")
    seqs = [list(c.events if isinstance(c, Chain) else c) for c in chains]
    if len(seqs) < 2:
        raise LorlenError("need a family of at least two chains")
    if cell is None:
        cell = 2.0 * nn_spacing(cs)
    if slab is None:
        slab = max(2.0 * cell, 1e-9)
    t_lo = max(cs.times[s[0]] for s in seqs)
    t_hi = min(cs.times[s[-1]] for s in seqs)
    if t_hi <= t_lo:
        raise NoLimitError("chain family has no common time range")

    n_slabs = max(1, int(np.ceil((t_hi - t_lo) / slab)))
    reps: list[int] = []
    slabs = []
    scattered = 0
    used = 0
    for k in range(n_slabs):
        lo = t_lo + (t_hi - t_lo) * k / n_slabs
        hi = t_lo + (t_hi - t_lo) * (k + 1) / n_slabs
        visits = []  # (chain index, event id)
        for ci, s in enumerate(seqs):
            for e in s:
                t = cs.times[e]
                if lo <= t < hi or (k == n_slabs - 1 and t == hi):
                    visits.append((ci, e))
        if not visits:
            continue
        used += 1
        ids = sorted({e for _, e in visits})
        bases = [cs.bases[e] for e in ids]
        dmat = cs.sigma.pairwise(bases, bases)
        # greedy net: first unclaimed event founds a cell
        cell_of = {}
        founders = []
        for i, e in enumerate(ids):
            for f_idx, f in enumerate(founders):
                if dmat[i, f] <= cell:
                    cell_of[e] = f_idx
                    break
            else:
                founders.append(i)
                cell_of[e] = len(founders) - 1
        chains_in_cell: dict[int, set] = {}
        for ci, e in visits:
            chains_in_cell.setdefault(cell_of[e], set()).add(ci)
        win = max(chains_in_cell, key=lambda c: (len(chains_in_cell[c]), -ids[founders[c]]))
        freq = len(chains_in_cell[win]) / len(seqs)
        dispersion = float(dmat.max()) if len(ids) > 1 else 0.0
        last_chain = max(chains_in_cell[win])
        members = [e for ci, e in visits if ci == last_chain and cell_of[e] == win]
        rep = min(members)
        reps.append(rep)
        slabs.append(
            {
                "t_lo": float(lo),
                "t_hi": float(hi),
                "frequency": freq,
                "dispersion": dispersion,
                "representative": int(rep),
            }
        )
        if freq < 0.5 or dispersion > dispersion_factor * cell:
            scattered += 1

    if used == 0:
        raise NoLimitError("no events in the common time range")
    if scattered > used / 2:
        raise NoLimitError(
            f"family does not settle: {scattered}/{used} slabs scattered (cell {cell:.4g})"
        )

    reps = sorted(set(reps), key=lambda e: (cs.times[e], e))
    stitched = []
    drops = 0
    for e in reps:
        if not stitched or cs.causal[stitched[-1], e]:
            stitched.append(e)
        else:
            drops += 1
    null_steps = sum(1 for u, v in zip(stitched, stitched[1:]) if not cs.chron[u, v])
    hug = False
    if cs.region is not None and cs.sigma is not None and hasattr(cs.region, "slack"):
        sl = cs.region.slack([cs.bases[e] for e in stitched], cs.times[stitched], cs.sigma, cs.window)
        hug = bool(np.isfinite(sl).all() and (sl <= cell).mean() >= 0.5)
    length = chain_tau_length(cs, stitched) if len(stitched) > 1 else 0.0
    result = LimitLine(
        chain=Chain(events=tuple(int(e) for e in stitched), kind="causal", length=length),
        cell=float(cell),
        slabs=slabs,
        max_dispersion=max((s["dispersion"] for s in slabs), default=0.0),
        null_steps=null_steps,
        stitch_drops=drops,
        boundary_hug=hug,
    )
    return result


@dataclass
class NullChainReport:
    chains: list = field(default_factory=list)  # (events, obstructed, witness)
    no_null_lines: bool = True
    vacuous: bool = False

    def to_dict(self) -> dict:
        return {
            "no_null_lines": self.no_null_lines,
            "vacuous": self.vacuous,
            "chains": [
                {
                    "events": list(ev),
                    "obstructed": ob,
                    "witness": list(w) if w else None,
                }
                for ev, ob, w in self.chains
            ],
        }


def null_chain_scan(cs: CausalStructure, max_expansions: int = 500_000) -> NullChainReport:
    """Follow every discrete null geodesic and test it for internal jumps.

    Null steps are links of the causal-minus-chronological relation; chains
    grow only along straight continuations (the composed two-step pair must
    stay null), which pins each chain to one geodesic.  A maximal chain is
    obstructed when some pair of its events is chronological - on a wrapping
    cylinder the full-wrap pair always is.  The summary flag holds when every
    maximal null chain is obstructed; with no null pairs at all it holds
    vacuously.
    """
    null = cs.causal & ~cs.chron
    rep = NullChainReport()
    if not null.any():
        rep.vacuous = True
        return rep
    c32 = cs.causal.astype(np.float32)
    links = cs.causal & ~((c32 @ c32) > 0.5)
    nl = links & null

    def fwd(chain):
        v = chain[-1]
        cands = np.flatnonzero(nl[v])
        if len(chain) >= 2:
            cands = [w for w in cands if null[chain[-2], w]]
        return [int(w) for w in cands]

    def bwd(chain):
        u = chain[0]
        cands = np.flatnonzero(nl[:, u])
        if len(chain) >= 2:
            cands = [w for w in cands if null[w, chain[1]]]
        return [int(w) for w in cands]

    # seeds: links with no straight predecessor, so forward growth suffices
    starts = []
    for u, v in np.argwhere(nl):
        if not any(null[w, v] for w in np.flatnonzero(nl[:, u])):
            starts.append((int(u), int(v)))

    budget = max_expansions
    maximal: set[tuple[int, ...]] = set()
    stack = [list(s) for s in starts]
    while stack:
        budget -= 1
        if budget < 0:
            raise LorlenError("null chain scan exceeded its expansion budget")
        chain = stack.pop()
        exts = fwd(chain)
        if not exts:
            if not bwd(chain):
                maximal.add(tuple(chain))
            continue
        for w in exts:
            stack.append(chain + [w])

    for ev in sorted(maximal):
        sub = np.asarray(ev, dtype=int)
        ch = cs.chron[np.ix_(sub, sub)]
        pairs = np.argwhere(ch)
        if pairs.size:
            i, j = pairs[0]
            rep.chains.append((ev, True, (int(sub[i]), int(sub[j]))))
        else:
            rep.chains.append((ev, False, None))
            rep.no_null_lines = False
    return rep
