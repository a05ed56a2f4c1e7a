"""Comparison triangles in the Minkowski plane and curvature certificates.

A timelike triangle p1 << p2 << p3 with side separations (l12, l23, l13) is
realized canonically in the plane with p1 at the origin, p3 on the time axis
and p2 at nonnegative x.  Vertex angles are unsigned rapidities; the middle
vertex carries the law-of-cosines sign convention, which makes collinear
triangles have angle zero.  Certification samples geodesic triangles in a
metric product, maps side points to the plane at equal time separation from
the vertices, and checks that the measured separation between cross-side
points never exceeds the planar one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LorlenError, NoRelatedPairsError, UnrealizableError
from .product import ProductSpace

_SIDES = ("12", "23", "13")


def minkowski_tau(p, q) -> float:
    """Time separation between planar points, zero unless q is causally after p."""
    dx = q[0] - p[0]
    dt = q[1] - p[1]
    if dt < abs(dx):
        return 0.0
    return math.sqrt(dt * dt - dx * dx)


@dataclass(frozen=True)
class SideLengths:
    """Separations (l12, l23, l13) of a timelike triangle p1 << p2 << p3."""

    l12: float
    l23: float
    l13: float

    def __post_init__(self):
        if min(self.l12, self.l23, self.l13) <= 0:
            raise LorlenError("side separations must be positive")

    def gap(self) -> float:
        return self.l13 - self.l12 - self.l23

    def as_tuple(self):
        return (self.l12, self.l23, self.l13)


def _as_sides(sides) -> SideLengths:
    if isinstance(sides, SideLengths):
        return sides
    l12, l23, l13 = sides
    return SideLengths(float(l12), float(l23), float(l13))


@dataclass(frozen=True)
class ComparisonTriangle:
    p1: tuple
    p2: tuple
    p3: tuple
    sides: SideLengths

    def vertex(self, i: int):
        return (self.p1, self.p2, self.p3)[i - 1]


def realize(sides) -> ComparisonTriangle:
    """Canonical planar placement reproducing the three side separations.

    The middle vertex sits at the intersection of the two hyperbolae of
    constant separation from the endpoints; a deficit below rounding noise is
    snapped to the degenerate collinear placement.
    """
    s = _as_sides(sides)
    l12, l23, l13 = s.as_tuple()
    atol = 1e-12 * max(1.0, l13)
    if s.gap() < -atol:
        raise UnrealizableError(
            f"separations ({l12}, {l23}, {l13}) violate the reverse triangle inequality"
        )
    t = (l13 * l13 + l12 * l12 - l23 * l23) / (2.0 * l13)
    xx = t * t - l12 * l12
    x = math.sqrt(xx) if xx > 0 else 0.0
    return ComparisonTriangle(p1=(0.0, 0.0), p2=(x, t), p3=(0.0, l13), sides=s)


def corresponding_point(tri: ComparisonTriangle, side: str, u: float) -> tuple:
    """Planar point at time separation u from the side's first vertex."""
    if side not in _SIDES:
        raise LorlenError(f"side must be one of {_SIDES}")
    i, j = int(side[0]), int(side[1])
    a, b = tri.vertex(i), tri.vertex(j)
    lij = getattr(tri.sides, f"l{side}")
    if not 0.0 <= u <= lij + 1e-12 * max(1.0, lij):
        raise LorlenError(f"offset {u} outside [0, {lij}] on side {side}")
    f = u / lij
    return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))


@dataclass(frozen=True)
class VertexAngles:
    theta1: float
    theta2: float
    theta3: float
    cosine_rule_vertex: str

    def as_tuple(self):
        return (self.theta1, self.theta2, self.theta3)


def _acosh(arg: float) -> float:
    return math.acosh(max(1.0, arg))


def vertex_angles(sides) -> VertexAngles:
    """Unsigned rapidities at the three vertices of the planar realization.

    theta2 uses the middle-vertex form of the law of cosines, so collinear
    triangles get zero angle everywhere; the vertex whose angle satisfies
    that identity best is recorded.
    """
    s = _as_sides(sides)
    l12, l23, l13 = s.as_tuple()
    if s.gap() < -1e-12 * max(1.0, l13):
        raise UnrealizableError(f"separations ({l12}, {l23}, {l13}) are not realizable")
    q12, q23, q13 = l12 * l12, l23 * l23, l13 * l13
    th1 = _acosh((q12 + q13 - q23) / (2.0 * l12 * l13))
    th3 = _acosh((q13 + q23 - q12) / (2.0 * l13 * l23))
    th2 = _acosh((q13 - q12 - q23) / (2.0 * l12 * l23))
    r_mid = abs(q13 - q12 - q23 - 2.0 * l12 * l23 * math.cosh(th2))
    r_apex = abs(q13 - q12 - q23 - 2.0 * l12 * l23 * math.cosh(th1))
    vertex = "p2" if r_mid <= r_apex else "p1"
    return VertexAngles(theta1=th1, theta2=th2, theta3=th3, cosine_rule_vertex=vertex)


def law_of_cosines_residual(sides, angles: VertexAngles | None = None) -> float:
    """Defect of the middle-vertex identity; zero for exact realizations."""
    s = _as_sides(sides)
    if angles is None:
        angles = vertex_angles(s)
    l12, l23, l13 = s.as_tuple()
    return l13 * l13 - l12 * l12 - l23 * l23 - 2.0 * l12 * l23 * math.cosh(angles.theta2)


@dataclass(frozen=True)
class ProductTriangle:
    """Timelike geodesic triangle in a metric product.

    Vertices are (base point, time) pairs with p1 << p2 << p3.  Sides run
    along base-space geodesics with affine time, so the time separation is
    affine in the curve parameter.
    """

    points: tuple
    sides: SideLengths

    @classmethod
    def from_points(cls, ps: ProductSpace, p1, p2, p3) -> "ProductTriangle":
        r12 = ps.relation(p1, p2)
        r23 = ps.relation(p2, p3)
        r13 = ps.relation(p1, p3)
        if not (r12.chron and r23.chron and r13.chron):
            raise LorlenError("triangle vertices must be pairwise chronological")
        return cls(points=(p1, p2, p3), sides=SideLengths(r12.tau, r23.tau, r13.tau))

    def side_points(self, ps: ProductSpace, side: str, m: int) -> list:
        """m interior points of a side at equal separation fractions."""
        i, j = int(side[0]), int(side[1])
        (bi, ti), (bj, tj) = self.points[i - 1], self.points[j - 1]
        bases = ps.sigma.geodesic(bi, bj, m + 1)
        out = []
        for k in range(1, m + 1):
            f = k / (m + 1)
            out.append((f, (bases[k], ti + f * (tj - ti))))
        return out


def sample_product_triangles(
    ps: ProductSpace,
    n: int = 64,
    *,
    seed: int = 0,
    tau_range: tuple = (0.2, 2.0),
    max_extent: float | None = None,
    straddle: bool = False,
    max_attempts: int = 20000,
) -> list:
    """Random timelike geodesic triangles with side separations in range.

    With max_extent set, all pairwise base distances stay below it, which on
    a circle below half the circumference keeps every side wrap free.  The
    straddle mode targets branched bases: the two outer vertices sit far out
    on distinct legs with the middle vertex near the branch point, so sides
    cross it.
    """
    rng = np.random.default_rng(seed)
    lo, hi = tau_range
    w0, w1 = ps.window
    out = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > max_attempts:
            raise LorlenError(
                f"triangle sampling stalled after {max_attempts} attempts "
                f"({len(out)}/{n} found)"
            )
        if straddle:
            legs = rng.permutation(len(ps.sigma.legs))[:3]
            far = [float(ps.sigma.legs[k]) for k in legs]
            b1 = (int(legs[0]), far[0] * float(rng.uniform(0.6, 0.95)))
            b2 = (int(legs[1]), far[1] * float(rng.uniform(0.02, 0.15)))
            b3 = (int(legs[2]), far[2] * float(rng.uniform(0.6, 0.95)))
            bases = [b1, b2, b3]
        else:
            bases = ps.sigma.sample_uniform(rng, 3)
        d12 = ps.sigma.dist(bases[0], bases[1])
        d23 = ps.sigma.dist(bases[1], bases[2])
        d13 = ps.sigma.dist(bases[0], bases[2])
        if max_extent is not None and max(d12, d23, d13) > max_extent:
            continue
        if min(d12, d23, d13) == 0.0 and len({repr(b) for b in bases}) < 3:
            continue
        t12 = float(rng.uniform(lo, lo + (hi - lo) / 3))
        t23 = float(rng.uniform(lo, lo + (hi - lo) / 3))
        height = math.hypot(t12, d12) + math.hypot(t23, d23)
        if height > (w1 - w0):
            continue
        t1 = w0 + float(rng.uniform(0.0, (w1 - w0) - height))
        t2 = t1 + math.hypot(t12, d12)
        t3 = t2 + math.hypot(t23, d23)
        if (t3 - t1) ** 2 - d13 * d13 > hi * hi:
            continue
        tri = ProductTriangle.from_points(
            ps, (bases[0], t1), (bases[1], t2), (bases[2], t3)
        )
        out.append(tri)
    return out


@dataclass
class CertReport:
    triangles: int = 0
    pairs: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    worst_slack: float = 0.0
    max_abs_gap: float = 0.0

    @property
    def status(self) -> str:
        return "fail" if self.violations else "pass"

    def to_dict(self) -> dict:
        return {
            "triangles": self.triangles,
            "pairs": self.pairs,
            "skipped": self.skipped,
            "violations": self.violations,
            "worst_slack": self.worst_slack,
            "max_abs_gap": self.max_abs_gap,
            "status": self.status,
        }


def _cross_pair_gap(ps, tri, plane, sa, fa, pa, sb, fb, pb):
    """Measured minus planar separation for one ordered cross-side pair."""
    tau = ps.relation(pa, pb).tau
    ca = corresponding_point(plane, sa, fa * getattr(tri.sides, f"l{sa}"))
    cb = corresponding_point(plane, sb, fb * getattr(tri.sides, f"l{sb}"))
    tau_bar = minkowski_tau(ca, cb)
    return tau, tau_bar


def certify_curvature_below(
    ps: ProductSpace,
    triangles=None,
    *,
    n_triangles: int = 64,
    m: int = 8,
    tol: float = 1e-6,
    seed: int = 0,
    tau_range: tuple = (0.2, 2.0),
    max_extent: float | None = None,
    straddle: bool = False,
) -> CertReport:
    """One-sided certificate that cross-side separations never beat the plane.

    For each triangle, m points per side are mapped to the planar realization
    at the same separation from the vertices, and every ordered cross-side
    pair must satisfy tau <= planar tau + tol.  Each candidate violation is
    recomputed from the raw points before being reported, so false positives
    cannot survive; under-sampling can only miss violations, never invent
    them.
    """
    if triangles is None:
        triangles = sample_product_triangles(
            ps,
            n_triangles,
            seed=seed,
            tau_range=tau_range,
            max_extent=max_extent,
            straddle=straddle,
        )
    report = CertReport()
    for tid, tri in enumerate(triangles):
        if tri.sides.gap() < -1e-12 * max(1.0, tri.sides.l13):
            report.skipped += 1
            continue
        report.triangles += 1
        plane = realize(tri.sides)
        pts = {s: tri.side_points(ps, s, m) for s in _SIDES}
        for ka, sa in enumerate(_SIDES):
            for sb in _SIDES[ka + 1 :]:
                for fa, pa in pts[sa]:
                    for fb, pb in pts[sb]:
                        for (s_x, f_x, p_x), (s_y, f_y, p_y) in (
                            ((sa, fa, pa), (sb, fb, pb)),
                            ((sb, fb, pb), (sa, fa, pa)),
                        ):
                            report.pairs += 1
                            tau, tau_bar = _cross_pair_gap(
                                ps, tri, plane, s_x, f_x, p_x, s_y, f_y, p_y
                            )
                            gap = tau - tau_bar
                            report.max_abs_gap = max(report.max_abs_gap, abs(gap))
                            if gap > tol:
                                tau2, bar2 = _cross_pair_gap(
                                    ps, tri, plane, s_x, f_x, p_x, s_y, f_y, p_y
                                )
                                if tau2 - bar2 > tol:
                                    report.violations.append(
                                        {
                                            "tri": tid,
                                            "pair": [s_x, f_x, s_y, f_y],
                                            "tau": tau2,
                                            "tau_bar": bar2,
                                            "slack": tau2 - bar2,
                                        }
                                    )
                                    report.worst_slack = max(
                                        report.worst_slack, tau2 - bar2
                                    )
    report.violations.sort(key=lambda v: (v["tri"], v["pair"]))
    return report


@dataclass
class UpperAngleReport:
    estimate: float
    stages: list = field(default_factory=list)  # (s, t, angle or None)

    @property
    def values(self):
        return [a for _, _, a in self.stages if a is not None]

    def tail_sups(self):
        vals = self.values
        return [max(vals[i:]) for i in range(len(vals))]

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "stages": [
                {"s": s, "t": t, "angle": a} for s, t, a in self.stages
            ],
        }


def _chain_accessors(obj, alpha, beta):
    """Common (tau, chron, vertex check) access for event or point chains."""
    if isinstance(obj, ProductSpace):

        def tau(u, v):
            return obj.relation(u, v).tau

        def chron(u, v):
            return obj.relation(u, v).chron

        same = alpha[0] == beta[0]
    else:

        def tau(u, v):
            return float(obj.tau[u, v])

        def chron(u, v):
            return bool(obj.chron[u, v])

        same = int(alpha[0]) == int(beta[0])
    return tau, chron, same


def upper_angle(
    obj,
    alpha,
    beta,
    *,
    s0: float | None = None,
    ratio: float = 0.5,
    stages: int = 8,
) -> UpperAngleReport:
    """Comparison angle at a shared vertex along a halving scale schedule.

    alpha and beta are future chains starting at the same vertex.  At stage k
    the members closest below s0/2^k on alpha and ratio*s0/2^k on beta form a
    triangle with the vertex when chronologically related; the angle reported
    is the planar one at the vertex.  The estimate is the supremum over the
    later half of the valid stages.  With no related pair at any stage there
    is no angle to estimate.
    """
    if len(alpha) < 2 or len(beta) < 2:
        raise LorlenError("chains need a vertex and at least one more member")
    tau, chron, same = _chain_accessors(obj, alpha, beta)
    if not same:
        raise LorlenError("chains must share their first member")
    vertex = alpha[0]
    for seq in (alpha, beta):
        for u, v in zip(seq, seq[1:]):
            if not chron(u, v):
                raise LorlenError("chains must be chronological")
    a_tau = [(tau(vertex, p), p) for p in alpha[1:]]
    b_tau = [(tau(vertex, p), p) for p in beta[1:]]
    if s0 is None:
        s0 = a_tau[-1][0]
    report = UpperAngleReport(estimate=0.0)
    for k in range(stages):
        s_k = s0 * 2.0 ** (-k)
        t_k = ratio * s_k
        cand_a = [(v, p) for v, p in a_tau if 0.0 < v <= s_k * (1 + 1e-12)]
        cand_b = [(v, p) for v, p in b_tau if 0.0 < v <= t_k * (1 + 1e-12)]
        angle = None
        if cand_a and cand_b:
            va, pa = max(cand_a, key=lambda x: x[0])
            vb, pb = max(cand_b, key=lambda x: x[0])
            if chron(pb, pa):
                lens = (vb, tau(pb, pa), va)
            elif chron(pa, pb):
                lens = (va, tau(pa, pb), vb)
            else:
                lens = None
            if lens is not None:
                try:
                    angle = vertex_angles(SideLengths(*lens)).theta1
                except UnrealizableError:
                    angle = None
        report.stages.append((s_k, t_k, angle))
    vals = report.values
    if not vals:
        raise NoRelatedPairsError("no chronologically related pair at any stage")
    tail = vals[len(vals) // 2 :]
    report.estimate = max(tail)
    return report


@dataclass
class AngleCheckReport:
    estimate: float
    tol: float
    rows: list = field(default_factory=list)  # (s, t, angle, ok)
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "tol": self.tol,
            "ok": self.ok,
            "stages": [
                {"s": s, "t": t, "angle": a, "ok": good} for s, t, a, good in self.rows
            ],
            "failures": self.failures,
        }


def angle_comparison_check(
    obj,
    alpha,
    beta,
    *,
    tol: float = 1e-6,
    s0: float | None = None,
    ratio: float = 0.5,
    stages: int = 8,
) -> AngleCheckReport:
    """Check that no stage angle exceeds the final vertex-angle estimate.

    In a space whose curvature certificate passes, the comparison angle can
    only shrink toward the vertex, so every stage must sit at or below the
    tail estimate.  A stage above it is the report of a failed bound, the
    expected outcome across a branch point.
    """
    ua = upper_angle(obj, alpha, beta, s0=s0, ratio=ratio, stages=stages)
    out = AngleCheckReport(estimate=ua.estimate, tol=tol)
    for idx, (s, t, a) in enumerate(ua.stages):
        good = a is None or a <= ua.estimate + tol
        out.rows.append((s, t, a, good))
        if not good:
            out.failures.append(
                {"stage": idx, "s": s, "t": t, "angle": a, "estimate": ua.estimate}
            )
    return out
