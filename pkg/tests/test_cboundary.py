"""Ideal points on truncated structures: pasts, pairing, classes, checkers.

Claims covered:
- chain pasts are unions of member pasts, monotone in the chain, and match
  the closed-form cone on grids
- classification finds the carrying bulk event or recognizes escape
- pairing by mutual maximality agrees with a brute-force oracle, and
  terminal sets with no partner pair with the empty set
- the finite liminf/limsup test under both tail conventions
- separations along generators: exact on bulk pairs, unbounded toward the
  top, zero against the empty set
- boundary classes: one on cylinder and torus, several on a diamond region,
  grouping verified exhaustively, empty horizon raises
- convergence, inclusion, and coverage checkers with their closed forms
"""

from __future__ import annotations

import numpy as np
import pytest

from lorlen import (
    CompletionPair,
    EmptyHorizonError,
    LorlenError,
    PastSet,
    build_causal_structure,
    build_closure,
    check_chain_convergence,
    check_vertical_past_covers,
    check_vertical_past_inclusion,
    classify,
    down_set,
    future_boundary_classes,
    generate_IF,
    generate_IP,
    limit_operator,
    load_run_spec,
    past_boundary_classes,
    reverse_structure,
    s_relation_pairs,
    sprinkle,
    tau_bar,
    up_set,
)

D4_EDGES = [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)]


def grid_structure(sigma, window, nx, nt, region=None):
    spec = {"sigma": sigma, "window": list(window), "mode": {"grid": {"nx": nx, "nt": nt}}}
    if region is not None:
        spec["region"] = region
    ps, cfg = load_run_spec(spec)
    return build_causal_structure(ps, sprinkle(ps, cfg))


def cylinder_grid(nx=8, nt=41, height=10.0):
    return grid_structure({"type": "circle", "L": 1.0}, (0.0, height), nx, nt)


def diamond_grid():
    return grid_structure(
        {"type": "interval", "L": 2.0},
        (-1.0, 1.0),
        9,
        9,
        region={"diamond": {"bottom": [1.0, -1.0], "top": [1.0, 1.0]}},
    )


class TestPastSets:
    def test_top_event_past(self):
        cs = build_closure(4, D4_EDGES)
        ip = generate_IP(cs, [3])
        assert ip.members == {0, 1, 2}
        assert ip.generator == (3,)

    def test_empty_chain(self):
        cs = build_closure(4, D4_EDGES)
        assert generate_IP(cs, []).members == frozenset()

    def test_monotone_in_chain(self):
        cs = build_closure(4, D4_EDGES)
        assert generate_IP(cs, [0]).members <= generate_IP(cs, [0, 1]).members
        assert generate_IP(cs, [0, 1]).members <= generate_IP(cs, [0, 1, 3]).members

    def test_matches_cone_on_grid(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.5), key=lambda i: cs.times[i]
        )
        ip = generate_IP(cs, fiber)
        t_top = cs.times[fiber[-1]]
        cone = {
            i
            for i in range(cs.n)
            if t_top - cs.times[i] > cs.sigma.dist(cs.bases[i], 0.5)
        }
        assert ip.members == cone

    def test_non_chron_generator_rejected(self):
        cs = cylinder_grid(nx=8, nt=9, height=1.0)
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        with pytest.raises(LorlenError):
            generate_IP(cs, [by_coord[(0.0, 0.0)], by_coord[(0.125, 0.125)]])

    def test_future_set_generator_descends(self):
        cs = build_closure(4, D4_EDGES)
        f = generate_IF(cs, [0, 1])
        assert f.members == {1, 2, 3}
        assert f.generator == (1, 0)


class TestClassify:
    def test_full_bulk_event(self):
        cs = build_closure(4, D4_EDGES)
        c = classify(cs, generate_IP(cs, [3]), range(4))
        assert (c.kind, c.event) == ("PIP", 3)

    def test_chain_stopping_mid_bulk(self):
        cs = build_closure(4, D4_EDGES)
        c = classify(cs, generate_IP(cs, [0, 1]), range(4))
        assert c.kind == "PIP"
        assert c.event == 1

    def test_escaping_chain_is_terminal(self):
        cs = cylinder_grid(nx=8, nt=21, height=5.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.0), key=lambda i: cs.times[i]
        )
        bulk = [i for i in range(cs.n) if cs.times[i] <= 3.0]
        ip = generate_IP(cs, fiber)
        c = classify(cs, ip, bulk)
        assert c.kind == "TIP"
        assert ip.classification is c

    def test_unmatched_interior_set(self):
        cs = build_closure(4, D4_EDGES)
        ip = PastSet(members=frozenset({0, 3}), generator=(1,))
        assert classify(cs, ip, range(4)).kind == "undetermined"


class TestUpDownSets:
    def test_bottom_event(self):
        cs = build_closure(4, D4_EDGES)
        assert up_set(cs, {0}) == {1, 2, 3}

    def test_everything_has_empty_up_set(self):
        cs = build_closure(4, D4_EDGES)
        assert up_set(cs, {0, 1, 2, 3}) == frozenset()

    def test_empty_is_vacuous(self):
        cs = build_closure(4, D4_EDGES)
        assert up_set(cs, frozenset()) == frozenset(range(4))
        assert down_set(cs, frozenset()) == frozenset(range(4))

    def test_down_set_dual(self):
        cs = build_closure(4, D4_EDGES)
        assert down_set(cs, {3}) == {0, 1, 2}
        assert down_set(cs, {1, 2, 3}) == {0}


def s_oracle(cs, ips, ifs):
    """Direct quantifier translation of mutual maximality."""
    ips = {p.members: p for p in ips if p.members}
    ifs = {f.members: f for f in ifs if f.members}

    def up(m):
        return {y for y in range(cs.n) if all(cs.chron[x, y] for x in m)}

    def down(m):
        return {x for x in range(cs.n) if all(cs.chron[x, y] for y in m)}

    pairs = set()
    for pm in ips:
        for fm in ifs:
            f_in = fm <= up(pm) and not any(
                fm < o <= up(pm) for o in ifs
            )
            p_in = pm <= down(fm) and not any(
                pm < o <= down(fm) for o in ips
            )
            if f_in and p_in:
                pairs.add((pm, fm))
    return pairs


class TestSRelation:
    def test_matches_brute_force_on_diamond(self):
        cs = build_closure(4, D4_EDGES)
        chains_up = [[0], [1], [2], [3], [0, 1], [0, 2], [0, 1, 3], [1, 3]]
        ips = [generate_IP(cs, c) for c in chains_up]
        ifs = [generate_IF(cs, c) for c in chains_up]
        got = {
            (p.members, f.members)
            for p, f in ((pr.P, pr.F) for pr in s_relation_pairs(cs, ips, ifs))
            if p is not None and f is not None
        }
        assert got == s_oracle(cs, ips, ifs)

    def test_terminal_pairs_with_empty(self):
        cs = cylinder_grid(nx=8, nt=21, height=5.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.0), key=lambda i: cs.times[i]
        )
        ip = generate_IP(cs, fiber)
        classify(cs, ip, [i for i in range(cs.n) if cs.times[i] <= 3.0])
        pairs = s_relation_pairs(cs, [ip], [])
        assert pairs == [CompletionPair(P=ip, F=None)]

    def test_no_futures_given(self):
        cs = build_closure(4, D4_EDGES)
        ip = generate_IP(cs, [0, 1, 3])
        pairs = s_relation_pairs(cs, [ip], [])
        assert pairs == []  # interior sets without partners are dropped


class TestLimitOperator:
    def test_constant_sequence(self):
        cs = build_closure(4, D4_EDGES)
        p = generate_IP(cs, [3])
        assert limit_operator(cs, [p, p, p], p)
        assert not limit_operator(cs, [p, p, p], {0, 1, 2, 3})

    def test_alternating_disjoint_periodic(self):
        cs = build_closure(4, D4_EDGES)
        a, b = generate_IP(cs, [1]), generate_IP(cs, [2])
        a = PastSet(members=frozenset({1}), generator=(1,))
        b = PastSet(members=frozenset({2}), generator=(2,))
        seq = [a, b, a, b]
        for cand in ({1}, {2}, {1, 2}):
            assert not limit_operator(cs, seq, cand, tail="periodic")

    def test_increasing_chain_constant_tail(self):
        cs = build_closure(4, D4_EDGES)
        seq = [generate_IP(cs, [1]), generate_IP(cs, [1, 3])]
        assert not limit_operator(cs, seq, seq[0])
        assert limit_operator(cs, seq, seq[1])

    def test_empty_sequence_rejected(self):
        cs = build_closure(4, D4_EDGES)
        with pytest.raises(LorlenError):
            limit_operator(cs, [], {0})


class TestTauBar:
    def test_bulk_pair_equals_table(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        ids = sorted(range(cs.n), key=lambda i: (cs.times[i], i))
        x, y = ids[2], ids[-3]
        if not cs.causal[x, y]:
            x, y = ids[0], ids[-1]
        p1 = CompletionPair(P=generate_IP(cs, [x]), F=generate_IF(cs, [x]))
        p2 = CompletionPair(P=generate_IP(cs, [y]), F=generate_IF(cs, [y]))
        r = tau_bar(cs, p1, p2)
        assert r.value == cs.tau[x, y]
        assert not r.unbounded

    def test_empty_side_is_zero(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        p1 = CompletionPair(P=None, F=generate_IF(cs, [0]))
        tip = CompletionPair(P=generate_IP(cs, [1]), F=None)
        assert tau_bar(cs, tip, CompletionPair(P=generate_IP(cs, [1]), F=None)).value == 0.0
        assert tau_bar(cs, p1, CompletionPair(P=None, F=None)).value == 0.0

    def test_growth_toward_top_is_unbounded(self):
        cs = cylinder_grid(nx=8, nt=41, height=10.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.25), key=lambda i: cs.times[i]
        )
        bottom = fiber[0]
        pair_x = CompletionPair(P=generate_IP(cs, [bottom]), F=generate_IF(cs, [bottom]))
        tip = CompletionPair(P=generate_IP(cs, fiber), F=None)
        r = tau_bar(cs, pair_x, tip)
        assert r.unbounded
        assert r.monotone
        assert r.value == cs.tau[bottom, fiber[-1]]
        assert r.to_dict()["value"] == "unbounded"


class TestBoundaryClasses:
    def test_cylinder_single_class_covers_bulk(self):
        cs = cylinder_grid()
        classes = future_boundary_classes(cs, margin=1.5)
        assert len(classes) == 1
        bulk = {i for i in range(cs.n) if cs.times[i] <= 10.0 - 1.5}
        assert classes[0].bulk_past == bulk
        for chain in classes[0].representatives:
            assert all(cs.chron[a, b] for a, b in zip(chain, chain[1:]))

    def test_cylinder_poisson_seed_sweep(self):
        for seed in range(3):
            ps, cfg = load_run_spec(
                {
                    "sigma": {"type": "circle", "L": 1.0},
                    "window": [0.0, 6.0],
                    "mode": {"poisson": {"density": 250}},
                    "seed": seed,
                }
            )
            cs = build_causal_structure(ps, sprinkle(ps, cfg))
            assert len(future_boundary_classes(cs)) == 1

    def test_torus_single_class(self):
        cs = grid_structure({"type": "torus", "L1": 1.0, "L2": 1.0}, (0.0, 3.0), 6, 13)
        assert len(future_boundary_classes(cs)) == 1

    def test_diamond_region_splits(self):
        cs = diamond_grid()
        classes = future_boundary_classes(cs, margin=0.8)
        assert len(classes) >= 2

    def test_grouping_matches_exhaustive_pasts(self):
        cs = diamond_grid()
        classes = future_boundary_classes(cs, margin=0.8)
        bulk = [i for i in range(cs.n) if cs.times[i] <= 1.0 - 0.8]
        for c in classes:
            for e in c.terminals:
                past = {i for i in bulk if cs.chron[i, e]}
                assert past == set(c.bulk_past)
        terms = [e for c in classes for e in c.terminals]
        assert len(terms) == len(set(terms))

    def test_empty_horizon_raises(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        with pytest.raises(EmptyHorizonError):
            future_boundary_classes(cs, margin=0.8, top=99.0)

    def test_no_bulk_raises(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        with pytest.raises(LorlenError):
            future_boundary_classes(cs, margin=100.0)

    def test_past_classes_by_reversal(self):
        cs = cylinder_grid()
        classes = past_boundary_classes(cs, margin=1.5)
        assert len(classes) == 1
        chain = classes[0].representatives[0]
        assert all(cs.times[a] >= cs.times[b] for a, b in zip(chain, chain[1:]))

    def test_reverse_structure_involution(self):
        cs = cylinder_grid(nx=8, nt=9, height=2.0)
        rev = reverse_structure(cs)
        assert (rev.chron == cs.chron.T).all()
        assert (rev.tau == cs.tau.T).all()
        back = reverse_structure(rev)
        assert (back.chron == cs.chron).all()
        assert np.allclose(back.times, cs.times)


class TestChainConvergence:
    def test_straight_null_prefix_converges_to_last(self):
        cs = cylinder_grid(nx=8, nt=9, height=1.0)
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        chain = [by_coord[((0.0 + k / 8) % 1.0, k / 8)] for k in range(5)]
        rep = check_chain_convergence(cs, chain)
        assert rep.precondition_ok
        assert rep.found
        assert rep.event == chain[-1]
        assert rep.tail_gap == 0.0

    def test_extension_breaks_precondition(self):
        cs = cylinder_grid(nx=8, nt=9, height=1.0)
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        chain = [by_coord[((0.0 + k / 8) % 1.0, k / 8)] for k in range(6)]
        rep = check_chain_convergence(cs, chain)
        assert not rep.precondition_ok
        assert rep.chron_witness is not None
        i, j = rep.chron_witness
        assert cs.chron[i, j]

    def test_single_event_converges_to_itself(self):
        cs = cylinder_grid(nx=8, nt=9, height=1.0)
        rep = check_chain_convergence(cs, [5])
        assert rep.found
        assert rep.tail_gap == 0.0

    def test_region_boundary_chain_escapes(self):
        cs = diamond_grid()
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        edge = [by_coord[(1.0 + k * 0.25, -1.0 + k * 0.25)] for k in range(4)]
        rep = check_chain_convergence(cs, edge)
        assert rep.precondition_ok
        assert rep.escaped
        assert not rep.found

    def test_non_chain_rejected(self):
        cs = cylinder_grid(nx=8, nt=9, height=1.0)
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        with pytest.raises(LorlenError):
            check_chain_convergence(cs, [by_coord[(0.0, 0.5)], by_coord[(0.5, 0.5)]])


class TestVerticalPastInclusion:
    def test_spiral_into_fiber(self):
        cs = cylinder_grid(nx=8, nt=17, height=2.0)
        by_coord = {(cs.bases[i], cs.times[i]): i for i in range(cs.n)}
        spiral = [by_coord[((0.5 + (4 - k) * 0.125) % 1.0, k * 0.25)] for k in range(5)]
        spiral += [by_coord[(0.5, 1.25)], by_coord[(0.5, 1.75)], by_coord[(0.5, 2.0)]]
        rep = check_vertical_past_inclusion(cs, spiral, 0.5, margin=1.0)
        assert rep.converged
        assert rep.reached_top
        assert rep.ok
        assert rep.exceptions == []
        assert rep.checked > 0

    def test_fiber_against_itself(self):
        cs = cylinder_grid(nx=8, nt=17, height=2.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.25), key=lambda i: cs.times[i]
        )
        rep = check_vertical_past_inclusion(cs, fiber, 0.25, margin=1.0)
        assert rep.ok

    def test_bounded_chain_flagged(self):
        cs = cylinder_grid(nx=8, nt=17, height=2.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.25), key=lambda i: cs.times[i]
        )
        rep = check_vertical_past_inclusion(cs, fiber[:4], 0.25, margin=1.0)
        assert not rep.reached_top
        assert not rep.ok

    def test_divergent_bases_flagged(self):
        cs = cylinder_grid(nx=8, nt=17, height=2.0)
        fiber = sorted(
            (i for i in range(cs.n) if cs.bases[i] == 0.25), key=lambda i: cs.times[i]
        )
        rep = check_vertical_past_inclusion(cs, fiber, 0.75, margin=1.0)
        assert not rep.converged
        assert not rep.ok


class TestVerticalPastCovers:
    def test_cylinder_covers_exactly(self):
        cs = cylinder_grid(nx=8, nt=41, height=10.0)
        for b in (0.25, 0.3):
            rep = check_vertical_past_covers(cs, b)
            assert rep.fraction == 1.0
            assert rep.covers
            assert rep.missing == []

    def test_torus_covers(self):
        cs = grid_structure({"type": "torus", "L1": 1.0, "L2": 1.0}, (0.0, 3.0), 6, 13)
        rep = check_vertical_past_covers(cs, (0.5, 0.5))
        assert rep.covers

    def test_diamond_leaves_gaps(self):
        cs = diamond_grid()
        rep = check_vertical_past_covers(cs, 1.0, margin=0.8)
        assert rep.fraction < 1.0
        assert rep.missing
        assert rep.line_top == 1.0

    def test_band_truncates_line(self):
        cs = grid_structure(
            {"type": "circle", "L": 1.0}, (0.0, 4.0), 8, 17, region={"band": [0.5, 3.0]}
        )
        rep = check_vertical_past_covers(cs, 0.0, margin=1.5)
        assert rep.line_top == 3.0
        assert 0.0 < rep.fraction <= 1.0
