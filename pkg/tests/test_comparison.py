"""Planar comparison triangles, vertex angles, and curvature certificates.

Claims covered:
- planar time separation closed form, including the spacelike cutoff
- canonical realization reproduces the side separations to 1e-12 and
  rejects triples violating the reverse triangle inequality
- corresponding points are affine in time separation along each side
- vertex angles match atanh rapidities of the embedded side directions,
  the middle vertex satisfies the law of cosines, and the three angles
  satisfy the additivity identity
- wrap-free cylinder triangles certify with near-equality, a branched base
  yields re-verified violations, and collinear triangles are exact
- the scale-schedule angle estimate reproduces the flat rapidity between a
  vertical and a tilted chain, and fails across a branch point
"""

from __future__ import annotations

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lorlen import (
    LorlenError,
    NoRelatedPairsError,
    ProductSpace,
    ProductTriangle,
    SideLengths,
    UnrealizableError,
    angle_comparison_check,
    builtin,
    certify_curvature_below,
    corresponding_point,
    law_of_cosines_residual,
    minkowski_tau,
    realize,
    sample_product_triangles,
    upper_angle,
    vertex_angles,
)

realizable = st.tuples(
    st.floats(min_value=0.1, max_value=5.0),
    st.floats(min_value=0.1, max_value=5.0),
    st.floats(min_value=1e-6, max_value=5.0),
).map(lambda t: SideLengths(t[0], t[1], t[0] + t[1] + t[2]))


class TestMinkowskiTau:
    def test_vertical(self):
        assert minkowski_tau((0, 0), (0, 3)) == 3.0

    def test_boosted(self):
        assert minkowski_tau((0, 0), (3, 5)) == 4.0

    def test_spacelike_is_zero(self):
        assert minkowski_tau((0, 0), (2, 1)) == 0.0

    def test_past_directed_is_zero(self):
        assert minkowski_tau((0, 3), (0, 0)) == 0.0


class TestRealize:
    def test_two_hyperbola_intersection(self):
        tri = realize(SideLengths(1, 1, 3))
        assert tri.p1 == (0.0, 0.0)
        assert tri.p3 == (0.0, 3.0)
        assert tri.p2[0] == pytest.approx(math.sqrt(1.25), abs=1e-12)
        assert tri.p2[1] == pytest.approx(1.5, abs=1e-12)

    def test_degenerate_collinear(self):
        tri = realize(SideLengths(1, 1, 2))
        assert tri.p2 == (0.0, 1.0)

    def test_unrealizable_raises(self):
        with pytest.raises(UnrealizableError):
            realize(SideLengths(2, 1, 2))

    def test_nonpositive_side_rejected(self):
        with pytest.raises(LorlenError):
            SideLengths(0.0, 1.0, 2.0)

    @settings(max_examples=200, deadline=None)
    @given(realizable)
    def test_side_reconstruction(self, sides):
        tri = realize(sides)
        scale = max(1.0, sides.l13)
        assert minkowski_tau(tri.p1, tri.p2) == pytest.approx(sides.l12, abs=1e-12 * scale)
        assert minkowski_tau(tri.p2, tri.p3) == pytest.approx(sides.l23, abs=1e-12 * scale)
        assert minkowski_tau(tri.p1, tri.p3) == pytest.approx(sides.l13, abs=1e-12 * scale)
        assert tri.p2[0] >= 0.0


class TestCorrespondingPoint:
    def test_zero_offset_is_first_vertex(self):
        tri = realize(SideLengths(1, 1, 3))
        assert corresponding_point(tri, "12", 0.0) == tri.p1
        assert corresponding_point(tri, "23", 0.0) == tri.p2

    def test_vertical_midpoint(self):
        tri = realize(SideLengths(1, 1, 3))
        assert corresponding_point(tri, "13", 1.5) == (0.0, 1.5)

    def test_affine_separation(self):
        tri = realize(SideLengths(1, 1, 3))
        p = corresponding_point(tri, "12", 0.5)
        assert p == pytest.approx((math.sqrt(1.25) / 2, 0.75), abs=1e-12)
        assert minkowski_tau(tri.p1, p) == pytest.approx(0.5, abs=1e-12)
        assert minkowski_tau(p, tri.p2) == pytest.approx(0.5, abs=1e-12)

    def test_out_of_range_rejected(self):
        tri = realize(SideLengths(1, 1, 3))
        with pytest.raises(LorlenError):
            corresponding_point(tri, "12", 1.5)
        with pytest.raises(LorlenError):
            corresponding_point(tri, "12", -0.1)
        with pytest.raises(LorlenError):
            corresponding_point(tri, "21", 0.5)


class TestVertexAngles:
    def test_symmetric_triangle(self):
        va = vertex_angles(SideLengths(1, 1, 3))
        assert va.theta1 == pytest.approx(math.acosh(1.5), abs=1e-12)
        assert va.theta3 == pytest.approx(math.acosh(1.5), abs=1e-12)
        assert va.theta2 == pytest.approx(math.acosh(3.5), abs=1e-12)
        assert va.cosine_rule_vertex == "p2"

    def test_collinear_angles_vanish(self):
        va = vertex_angles(SideLengths(1, 1, 2))
        assert va.as_tuple() == (0.0, 0.0, 0.0)

    @settings(max_examples=200, deadline=None)
    @given(realizable)
    def test_rapidity_additivity(self, sides):
        va = vertex_angles(sides)
        assert va.theta2 == pytest.approx(va.theta1 + va.theta3, abs=1e-9)

    @settings(max_examples=200, deadline=None)
    @given(realizable)
    def test_law_of_cosines(self, sides):
        assert abs(law_of_cosines_residual(sides)) <= 1e-9 * sides.l13**2

    @settings(max_examples=200, deadline=None)
    @given(realizable)
    def test_matches_embedded_rapidities(self, sides):
        # the third side is vertical, so theta1 and theta3 are plain atanh
        tri = realize(sides)
        x, t = tri.p2
        va = vertex_angles(sides)
        assert va.theta1 == pytest.approx(abs(math.atanh(x / t)), abs=1e-9)
        assert va.theta3 == pytest.approx(
            abs(math.atanh(x / (sides.l13 - t))), abs=1e-9
        )

    def test_angles_vanish_toward_degeneracy(self):
        gaps = [10.0**-k for k in range(1, 9)]
        thetas = [vertex_angles(SideLengths(1, 1, 2 + g)).theta1 for g in gaps]
        assert all(a > b for a, b in zip(thetas, thetas[1:]))
        assert thetas[-1] < 1e-3


def _cylinder(L=1.0, window=(0.0, 4.0)):
    return ProductSpace(sigma=builtin("circle", L=L), window=window)


class TestCertify:
    def test_wrap_free_cylinder_is_flat(self):
        ps = _cylinder()
        rep = certify_curvature_below(
            ps, n_triangles=12, m=4, tol=1e-6, seed=3, max_extent=0.24
        )
        assert rep.status == "pass"
        assert rep.violations == []
        assert rep.triangles == 12
        assert rep.max_abs_gap <= 1e-6

    def test_manual_flat_triangle_embeds_exactly(self):
        ps = _cylinder()
        tri = ProductTriangle.from_points(
            ps, (0.1, 0.2), (0.3, 1.0), (0.2, 2.2)
        )
        rep = certify_curvature_below(ps, [tri], m=6)
        assert rep.status == "pass"
        assert rep.max_abs_gap <= 1e-9

    def test_collinear_triangle_is_exact(self):
        ps = _cylinder()
        tri = ProductTriangle.from_points(
            ps, (0.5, 0.1), (0.5, 1.1), (0.5, 2.3)
        )
        rep = certify_curvature_below(ps, [tri], m=5)
        assert rep.status == "pass"
        assert rep.max_abs_gap <= 1e-12

    def test_branch_straddling_triangle_violates(self):
        ps = ProductSpace(sigma=builtin("tripod", legs=(1, 1, 1)), window=(0.0, 4.0))
        tri = ProductTriangle.from_points(
            ps, ((0, 0.9), 0.0), ((2, 0.05), 1.0), ((1, 0.9), 2.0)
        )
        rep = certify_curvature_below(ps, [tri], m=3, tol=1e-6)
        assert rep.status == "fail"
        mid = [
            v
            for v in rep.violations
            if v["pair"][0] == "12" and v["pair"][2] == "23"
            and v["pair"][1] == 0.5 and v["pair"][3] == 0.5
        ]
        assert mid
        assert mid[0]["tau"] == pytest.approx(math.sqrt(0.2775), abs=1e-9)
        assert mid[0]["slack"] == pytest.approx(0.0909, abs=1e-3)

    def test_straddle_sampler_finds_violations(self):
        ps = ProductSpace(sigma=builtin("tripod", legs=(1, 1, 1)), window=(0.0, 4.0))
        rep = certify_curvature_below(
            ps, n_triangles=16, m=4, tol=1e-6, seed=0, straddle=True
        )
        assert rep.status == "fail"
        assert rep.worst_slack > 1e-3
        for v in rep.violations:
            assert v["slack"] == pytest.approx(v["tau"] - v["tau_bar"], abs=1e-15)

    def test_report_shape(self):
        ps = _cylinder()
        rep = certify_curvature_below(ps, n_triangles=2, m=2, seed=1, max_extent=0.2)
        d = rep.to_dict()
        assert set(d) == {
            "triangles",
            "pairs",
            "skipped",
            "violations",
            "worst_slack",
            "max_abs_gap",
            "status",
        }
        assert d["pairs"] == 2 * 3 * 2 * 2 * 2

    def test_sampler_respects_ranges(self):
        ps = _cylinder()
        tris = sample_product_triangles(
            ps, 10, seed=7, tau_range=(0.2, 2.0), max_extent=0.24
        )
        for tri in tris:
            assert 0.2 <= tri.sides.l12 <= 2.0
            assert 0.2 <= tri.sides.l23 <= 2.0
            assert tri.sides.l13 <= 2.0 + 1e-12
            assert tri.sides.gap() >= -1e-12


def _vertical_and_tilted(ps, x0=0.2, slope=0.5, s0=2.0, ratio=0.5, stages=6):
    svals = [s0 * 2.0**-k for k in range(stages)]
    tvals = [ratio * s for s in svals]
    alpha = [(x0, 0.0)] + [(x0, s) for s in sorted(svals)]
    beta = [(x0, 0.0)] + [((x0 + slope * t) % ps.sigma.L, t) for t in sorted(tvals)]
    return alpha, beta


class TestUpperAngle:
    def test_flat_rapidity_oracle(self):
        ps = _cylinder(L=4.0)
        alpha, beta = _vertical_and_tilted(ps)
        rep = upper_angle(ps, alpha, beta, s0=2.0, ratio=0.5, stages=6)
        want = math.atanh(0.5)
        assert rep.estimate == pytest.approx(want, abs=1e-9)
        for _, _, a in rep.stages:
            assert a == pytest.approx(want, abs=1e-9)

    def test_identical_chains_have_zero_angle(self):
        ps = _cylinder(L=4.0)
        alpha, _ = _vertical_and_tilted(ps)
        rep = upper_angle(ps, alpha, list(alpha), s0=2.0, ratio=0.5, stages=5)
        assert rep.estimate <= 1e-6
        assert all(a <= 1e-6 for a in rep.values)

    def test_spacelike_pairs_raise(self):
        ps = _cylinder(L=4.0)
        alpha, beta = _vertical_and_tilted(ps, slope=0.9, ratio=1.0)
        with pytest.raises(NoRelatedPairsError):
            upper_angle(ps, alpha, beta, s0=2.0, ratio=1.0, stages=5)

    def test_non_chron_chain_rejected(self):
        ps = _cylinder(L=4.0)
        alpha, _ = _vertical_and_tilted(ps)
        bad = [(0.2, 0.0), (2.2, 0.5)]
        with pytest.raises(LorlenError):
            upper_angle(ps, alpha, bad)

    def test_different_vertices_rejected(self):
        ps = _cylinder(L=4.0)
        alpha, beta = _vertical_and_tilted(ps)
        with pytest.raises(LorlenError):
            upper_angle(ps, alpha, [(0.9, 0.0)] + beta[1:])

    def test_event_chain_mode(self):
        from lorlen import build_closure

        cs = build_closure(4, [(0, 1, 1.0), (0, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0)])
        rep = upper_angle(cs, [0, 1, 3], [0, 2, 3], s0=2.0, ratio=0.5, stages=2)
        assert rep.estimate == pytest.approx(0.0, abs=1e-9)


class TestAngleComparison:
    def test_flat_pairs_pass_with_constant_stages(self):
        ps = _cylinder(L=4.0)
        alpha, beta = _vertical_and_tilted(ps)
        rep = angle_comparison_check(ps, alpha, beta, s0=2.0, ratio=0.5, stages=6)
        assert rep.ok
        vals = [a for _, _, a, _ in rep.rows if a is not None]
        assert max(vals) - min(vals) <= 1e-9

    def test_torus_pairs_pass(self):
        ps = ProductSpace(sigma=builtin("torus", L1=4.0, L2=4.0), window=(0.0, 4.0))
        svals = sorted(2.0 * 2.0**-k for k in range(5))
        alpha = [((0.5, 0.5), 0.0)] + [((0.5, 0.5), s) for s in svals]
        beta = [((0.5, 0.5), 0.0)] + [
            (((0.5 + 0.3 * s) % 4.0, (0.5 + 0.2 * s) % 4.0), s) for s in sorted(0.5 * s for s in svals)
        ]
        rep = angle_comparison_check(ps, alpha, beta, s0=2.0, ratio=0.5, stages=5)
        assert rep.ok

    def test_branch_crossing_fails(self):
        ps = ProductSpace(sigma=builtin("tripod", legs=(3, 3, 3)), window=(0.0, 8.0))
        vertex = ((2, 0.3), 0.0)
        svals = sorted(6.0 * 2.0**-k for k in range(6))
        tvals = sorted(0.2 * s for s in svals)

        def along(target_leg, params):
            far = (target_leg, 2.9)
            pts = [vertex]
            for u in params:
                arc = 0.5 * u
                base = (2, 0.3 - arc) if arc <= 0.3 else (target_leg, arc - 0.3)
                pts.append((base, u))
            return pts

        alpha = along(0, svals)
        beta = along(1, tvals)
        rep = angle_comparison_check(ps, alpha, beta, s0=6.0, ratio=0.2, stages=6)
        assert not rep.ok
        assert rep.failures[0]["angle"] == pytest.approx(math.acosh(1.3), abs=1e-9)
        assert rep.estimate <= 1e-6
