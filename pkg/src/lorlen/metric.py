"""Compact base metrics: built-in spaces, comparison angles, quadruple test.

Built-ins cover the desk-scale bestiary: circle, flat torus, interval, tripod
(the branching negative control), finite graph metrics and verbatim distance
matrices.  Continuum built-ins expose uniform sampling and evenly spaced
geodesic samplers; discrete ones expose their point lists and grid mode only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from .errors import LorlenError, NonMetricError


class MetricSpace:
    """Common interface for base spaces.

    Subclasses implement dist/pairwise, a diameter, and either continuum
    sampling (sample_uniform, grid_points, geodesic) or a discrete point
    list.  Points must be hashable.
    """

    name = "abstract"
    discrete = False

    def dist(self, p, q) -> float:
        return float(self.pairwise([p], [q])[0, 0])

    def pairwise(self, ps, qs) -> np.ndarray:
        out = np.empty((len(ps), len(qs)))
        for i, p in enumerate(ps):
            for j, q in enumerate(qs):
                out[i, j] = self.dist(p, q)
        return out

    @property
    def diameter(self) -> float:
        raise NotImplementedError

    @property
    def measure(self) -> float:
        """Total length/area used by Poisson sprinkling."""
        raise LorlenError(f"{self.name} supports grid mode only")

    def sample_uniform(self, rng: np.random.Generator, size: int) -> list:
        raise LorlenError(f"{self.name} supports grid mode only")

    def grid_points(self, nx: int) -> list:
        raise NotImplementedError

    def geodesic(self, p, q, n: int) -> list:
        """n+1 points from p to q along a shortest path."""
        raise NotImplementedError

    def spec(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(MetricSpace):
    L: float = 1.0
    name = "circle"

    def __post_init__(self):
        if self.L <= 0:
            raise LorlenError("circle circumference must be positive")

    def pairwise(self, ps, qs):
        p = np.asarray(ps, dtype=float).reshape(-1, 1)
        q = np.asarray(qs, dtype=float).reshape(1, -1)
        d = np.abs(p - q) % self.L
        return np.minimum(d, self.L - d)

    @property
    def diameter(self):
        return self.L / 2

    @property
    def measure(self):
        return self.L

    def sample_uniform(self, rng, size):
        return [float(x) for x in rng.uniform(0.0, self.L, size)]

    def grid_points(self, nx):
        return [self.L * i / nx for i in range(nx)]

    def geodesic(self, p, q, n):
        delta = (q - p) % self.L
        if delta > self.L / 2:
            delta -= self.L
        return [float((p + delta * k / n) % self.L) for k in range(n + 1)]

    def spec(self):
        return {"type": "circle", "L": self.L}


@dataclass(frozen=True)
class Torus(MetricSpace):
    L1: float = 1.0
    L2: float = 1.0
    name = "torus"

    def pairwise(self, ps, qs):
        p = np.asarray(ps, dtype=float)
        q = np.asarray(qs, dtype=float)
        d1 = np.abs(p[:, None, 0] - q[None, :, 0]) % self.L1
        d1 = np.minimum(d1, self.L1 - d1)
        d2 = np.abs(p[:, None, 1] - q[None, :, 1]) % self.L2
        d2 = np.minimum(d2, self.L2 - d2)
        return np.hypot(d1, d2)

    @property
    def diameter(self):
        return math.hypot(self.L1 / 2, self.L2 / 2)

    @property
    def measure(self):
        return self.L1 * self.L2

    def sample_uniform(self, rng, size):
        xs = rng.uniform(0.0, self.L1, size)
        ys = rng.uniform(0.0, self.L2, size)
        return [(float(x), float(y)) for x, y in zip(xs, ys)]

    def grid_points(self, nx):
        return [
            (self.L1 * i / nx, self.L2 * j / nx)
            for i in range(nx)
            for j in range(nx)
        ]

    def geodesic(self, p, q, n):
        deltas = []
        for a, b, L in ((p[0], q[0], self.L1), (p[1], q[1], self.L2)):
            d = (b - a) % L
            if d > L / 2:
                d -= L
            deltas.append(d)
        return [
            (float((p[0] + deltas[0] * k / n) % self.L1), float((p[1] + deltas[1] * k / n) % self.L2))
            for k in range(n + 1)
        ]

    def spec(self):
        return {"type": "torus", "L1": self.L1, "L2": self.L2}


@dataclass(frozen=True)
class Interval(MetricSpace):
    L: float = 1.0
    name = "interval"

    def pairwise(self, ps, qs):
        p = np.asarray(ps, dtype=float).reshape(-1, 1)
        q = np.asarray(qs, dtype=float).reshape(1, -1)
        return np.abs(p - q)

    @property
    def diameter(self):
        return self.L

    @property
    def measure(self):
        return self.L

    def sample_uniform(self, rng, size):
        return [float(x) for x in rng.uniform(0.0, self.L, size)]

    def grid_points(self, nx):
        if nx == 1:
            return [self.L / 2]
        return [self.L * i / (nx - 1) for i in range(nx)]

    def geodesic(self, p, q, n):
        return [float(p + (q - p) * k / n) for k in range(n + 1)]

    def spec(self):
        return {"type": "interval", "L": self.L}


@dataclass(frozen=True)
class Tripod(MetricSpace):
    """Three segments glued at a branch point.

    Points are (leg, s) with leg in {0, 1, 2} and s the arc distance from the
    center; s = 0 is the shared center on every leg.
    """

    legs: tuple[float, float, float] = (1.0, 1.0, 1.0)
    name = "tripod"

    def __post_init__(self):
        if len(self.legs) != 3 or any(l <= 0 for l in self.legs):
            raise LorlenError("tripod needs three positive leg lengths")

    def pairwise(self, ps, qs):
        pl = np.asarray([p[0] for p in ps], dtype=int)
        pa = np.asarray([p[1] for p in ps], dtype=float)
        ql = np.asarray([q[0] for q in qs], dtype=int)
        qa = np.asarray([q[1] for q in qs], dtype=float)
        same = pl[:, None] == ql[None, :]
        through = pa[:, None] + qa[None, :]
        along = np.abs(pa[:, None] - qa[None, :])
        # s = 0 is the center under any leg label, and through == along there
        return np.where(same, along, through)

    @property
    def diameter(self):
        a, b, c = sorted(self.legs)
        return b + c

    @property
    def measure(self):
        return float(sum(self.legs))

    def sample_uniform(self, rng, size):
        total = self.measure
        out = []
        for u in rng.uniform(0.0, total, size):
            for leg, l in enumerate(self.legs):
                if u <= l:
                    out.append((leg, float(u)))
                    break
                u -= l
        return out

    def grid_points(self, nx):
        pts = [(0, 0.0)]
        total = self.measure
        for leg, l in enumerate(self.legs):
            k = max(1, round(nx * l / total))
            pts.extend((leg, l * i / k) for i in range(1, k + 1))
        return pts

    def geodesic(self, p, q, n):
        lp, sp = p
        lq, sq = q
        out = []
        if lp == lq:
            for k in range(n + 1):
                out.append((lp, float(sp + (sq - sp) * k / n)))
        else:
            total = sp + sq
            for k in range(n + 1):
                s = total * k / n
                out.append((lp, float(sp - s)) if s <= sp else (lq, float(s - sp)))
        return out

    def spec(self):
        return {"type": "tripod", "legs": list(self.legs)}


class GraphMetric(MetricSpace):
    """Shortest-path metric on a finite weighted graph."""

    name = "graph"
    discrete = True

    def __init__(self, edges):
        labels = []
        for u, v, w in edges:
            if w <= 0:
                raise LorlenError(f"edge ({u!r}, {v!r}) needs positive length")
            for lab in (u, v):
                if lab not in labels:
                    labels.append(lab)
        self.points = labels
        self.index = {lab: i for i, lab in enumerate(labels)}
        n = len(labels)
        rows, cols, data = [], [], []
        for u, v, w in edges:
            rows.append(self.index[u]); cols.append(self.index[v]); data.append(float(w))
        g = csr_matrix((data, (rows, cols)), shape=(n, n))
        self._d, self._pred = shortest_path(g, directed=False, return_predecessors=True)
        if np.isinf(self._d).any():
            raise NonMetricError("graph is disconnected")
        self.edges = [(u, v, float(w)) for u, v, w in edges]

    def pairwise(self, ps, qs):
        pi = [self.index[p] for p in ps]
        qi = [self.index[q] for q in qs]
        return self._d[np.ix_(pi, qi)]

    @property
    def diameter(self):
        return float(self._d.max())

    def grid_points(self, nx):
        return list(self.points)

    def geodesic(self, p, q, n):
        # walk one shortest node path, then resample by nearest cumulative
        # distance; spacing is only approximate on graphs
        pi, qi = self.index[p], self.index[q]
        rev = [qi]
        while rev[-1] != pi:
            rev.append(int(self._pred[pi, rev[-1]]))
        path = [self.points[i] for i in reversed(rev)]
        cum = [0.0]
        for a, b in zip(path, path[1:]):
            cum.append(cum[-1] + self.dist(a, b))
        total = self.dist(p, q)
        out = []
        for k in range(n + 1):
            target = total * k / n
            idx = int(np.argmin([abs(c - target) for c in cum]))
            out.append(path[idx])
        return out

    def spec(self):
        return {"type": "graph", "edges": [[u, v, w] for u, v, w in self.edges]}


class MatrixMetric(MetricSpace):
    """Verbatim distance table over labelled points."""

    name = "matrix"
    discrete = True

    def __init__(self, points, d, tol: float = 1e-9):
        self.points = list(points)
        self._d = np.asarray(d, dtype=float)
        n = len(self.points)
        if self._d.shape != (n, n):
            raise NonMetricError(f"table shape {self._d.shape} does not match {n} points")
        self.index = {p: i for i, p in enumerate(self.points)}
        if np.abs(np.diag(self._d)).max(initial=0.0) > tol:
            i = int(np.argmax(np.abs(np.diag(self._d))))
            raise NonMetricError("nonzero diagonal entry", witness=(self.points[i],))
        if np.abs(self._d - self._d.T).max(initial=0.0) > tol:
            i, j = np.unravel_index(np.argmax(np.abs(self._d - self._d.T)), self._d.shape)
            raise NonMetricError("asymmetric table", witness=(self.points[i], self.points[j]))
        off = ~np.eye(n, dtype=bool)
        if n > 1 and self._d[off].min() <= -tol:
            raise NonMetricError("negative distance")
        self.worst_triangle_slack = 0.0
        for k in range(n):
            slack = self._d[:, None, k] + self._d[None, k, :] - self._d
            m = float(slack.min())
            self.worst_triangle_slack = min(self.worst_triangle_slack, m)
            if m < -tol:
                i, j = np.unravel_index(np.argmin(slack), slack.shape)
                raise NonMetricError(
                    f"triangle inequality fails by {-m:.3g}",
                    witness=(self.points[i], self.points[k], self.points[j]),
                )

    def pairwise(self, ps, qs):
        pi = [self.index[p] for p in ps]
        qi = [self.index[q] for q in qs]
        return self._d[np.ix_(pi, qi)]

    @property
    def diameter(self):
        return float(self._d.max())

    def grid_points(self, nx):
        return list(self.points)

    def geodesic(self, p, q, n):
        # no paths to follow; pick near-interpolating points when they exist
        total = self.dist(p, q)
        out = []
        for k in range(n + 1):
            target = total * k / n
            best, score = p, float("inf")
            for m in self.points:
                detour = self.dist(p, m) + self.dist(m, q) - total
                s = abs(self.dist(p, m) - target) + detour
                if s < score:
                    best, score = m, s
            out.append(best)
        return out

    def spec(self):
        return {"type": "matrix", "points": list(self.points), "d": self._d.tolist()}


_BUILTINS = {
    "circle": lambda **kw: Circle(L=kw.get("L", 1.0)),
    "torus": lambda **kw: Torus(L1=kw.get("L1", 1.0), L2=kw.get("L2", 1.0)),
    "interval": lambda **kw: Interval(L=kw.get("L", 1.0)),
    "tripod": lambda **kw: Tripod(legs=tuple(kw.get("legs", (1.0, 1.0, 1.0)))),
    "graph": lambda **kw: GraphMetric(kw["edges"]),
    "matrix": lambda **kw: MatrixMetric(kw["points"], kw["d"]),
}


def builtin(name: str, **params) -> MetricSpace:
    """Construct a built-in metric space by name."""
    try:
        make = _BUILTINS[name]
    except KeyError:
        raise LorlenError(f"unknown metric space {name!r}") from None
    return make(**params)


def metric_from_spec(obj: dict) -> MetricSpace:
    kw = {k: v for k, v in obj.items() if k != "type"}
    if obj.get("type") == "tripod" and "legs" in kw:
        kw["legs"] = tuple(kw["legs"])
    if obj.get("type") == "graph":
        kw["edges"] = [tuple(e) for e in kw["edges"]]
    return builtin(obj["type"], **kw)


def euclid_comparison_angle(s_ab: float, s_ac: float, s_bc: float, tol: float = 1e-9) -> float:
    """Angle at vertex a of the Euclidean triangle with the given side lengths.

    Degenerate (collinear) triangles are fine; a genuine triangle-inequality
    violation beyond tol raises.
    """
    if s_ab <= 0 or s_ac <= 0:
        raise LorlenError("angle vertex sides must be positive")
    hi = s_ab + s_ac
    lo = abs(s_ab - s_ac)
    if s_bc > hi + tol or s_bc < lo - tol:
        raise NonMetricError(
            f"sides ({s_ab}, {s_ac}, {s_bc}) violate the triangle inequality",
            witness=(s_ab, s_ac, s_bc),
        )
    c = (s_ab * s_ab + s_ac * s_ac - s_bc * s_bc) / (2.0 * s_ab * s_ac)
    return float(math.acos(min(1.0, max(-1.0, c))))


@dataclass
class QuadrupleReport:
    tested: int = 0
    skipped: int = 0
    violations: list = field(default_factory=list)
    tol: float = 1e-6

    @property
    def status(self) -> str:
        return "pass" if not self.violations else "fail"

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "tested": self.tested,
            "skipped": self.skipped,
            "tol": self.tol,
            "violations": [
                {"quad": list(map(repr, q)), "angle_sum": s} for q, s in self.violations
            ],
        }


def quadruple_curvature_test(
    ms: MetricSpace,
    quadruples=None,
    *,
    n_random: int = 0,
    seed: int = 0,
    tol: float = 1e-6,
) -> QuadrupleReport:
    """Check curvature >= 0 via comparison-angle sums at a center point.

    For each quadruple (p; a, b, c) the three Euclidean comparison angles at
    p must sum to at most 2*pi + tol.  Quadruples with a coincident pair are
    skipped and counted.  Pass explicit quadruples, or n_random with a seed.
    """
    rep = QuadrupleReport(tol=tol)
    quads = list(quadruples) if quadruples is not None else []
    if n_random:
        rng = np.random.default_rng(seed)
        if ms.discrete:
            pool = list(ms.points)
            if len(pool) >= 4:
                for _ in range(n_random):
                    idx = rng.choice(len(pool), size=4, replace=False)
                    quads.append(tuple(pool[i] for i in idx))
        else:
            for _ in range(n_random):
                quads.append(tuple(ms.sample_uniform(rng, 4)))
    for quad in quads:
        p, a, b, c = quad
        pa, pb, pc = ms.dist(p, a), ms.dist(p, b), ms.dist(p, c)
        ab, bc, ac = ms.dist(a, b), ms.dist(b, c), ms.dist(a, c)
        if min(pa, pb, pc, ab, bc, ac) <= 1e-12:
            rep.skipped += 1
            continue
        try:
            total = (
                euclid_comparison_angle(pa, pb, ab)
                + euclid_comparison_angle(pb, pc, bc)
                + euclid_comparison_angle(pa, pc, ac)
            )
        except NonMetricError:
            rep.skipped += 1
            continue
        rep.tested += 1
        if total > 2.0 * math.pi + tol:
            rep.violations.append((quad, float(total)))
    return rep
