"""Slim constants, coarse-center sets E_K and the equivariant projection of ideal triangles.

E_K(a, b, c) is the set of points within K of all three sides of the ideal
triangle on a, b, c. In the spiked plane every side is spike ∪ segment ∪
spike, and the planar distance to a side is the distance to its segment.
A point high on a spike is never a better center than the foot (its
distance to every side not climbing that spike grows with the height), so
centers and most of E_K live in the plane.

``project`` is the min-max (Chebyshev) center on a grid anchored at the
lexicographically least foot. All arithmetic happens in coordinates where
that foot is the origin, so translating the triangle by an integer vector
translates the chosen center by exactly that vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import DegeneratePairError, EmptySetError, GeometryError, InsufficientHorizonError
from .space.spiked import Plane, PointNet, Spike, SpikedPlane, SpikeEnd, euclid, euclid_arr, snap
from .space.tree import RegularTree, common_prefix


@dataclass(frozen=True)
class IdealTriangle:
    a: object
    b: object
    c: object
    space: object = field(default_factory=SpikedPlane, compare=False, hash=False)

    def __post_init__(self):
        if len({self.a, self.b, self.c}) < 3:
            raise DegeneratePairError(f"ideal triangle needs distinct vertices, got {self.vertices}")

    @property
    def vertices(self):
        return (self.a, self.b, self.c)

    @property
    def sides(self):
        """Sides (a,b), (b,c), (c,a) as bi-infinite geodesics."""
        sp = self.space
        return (sp.bi_infinite_geodesic(self.a, self.b),
                sp.bi_infinite_geodesic(self.b, self.c),
                sp.bi_infinite_geodesic(self.c, self.a))

    def sides_at(self, v):
        """The two sides ending at vertex v."""
        s = self.sides
        return {self.a: (s[0], s[2]), self.b: (s[0], s[1]), self.c: (s[1], s[2])}[v]

    def translated(self, g):
        return IdealTriangle(*(self.space.act(g, v) for v in self.vertices), space=self.space)


def triangle(*feet, space=None) -> IdealTriangle:
    """Spiked-plane triangle from three (m, n) feet."""
    return IdealTriangle(*(SpikeEnd(*f) for f in feet), space=space or SpikedPlane())


@dataclass
class CenterResult:
    center: object
    K_min: float
    E_K_diameter: float | None = None
    gates: tuple = ()
    K: float | None = None
    slim: float | None = None
    resolution: float | None = None


def side_distance(x, side) -> float:
    return side.distance_to(x)


# --------------------------------------------------------------------------
# spiked plane helpers
# --------------------------------------------------------------------------


def _feet(T):
    return np.array([v.foot for v in T.vertices], dtype=float)


def _side_max(sides, P):
    """Max over the three sides of the planar distance, for an (k, 2) array."""
    return np.max([s.plane_dist(P)[0] for s in sides], axis=0)


def _least_foot(T):
    return min(v.foot for v in T.vertices)


def _normalized(T):
    m0, n0 = _least_foot(T)
    feet = tuple(sorted((v.m - m0, v.n - n0) for v in T.vertices))
    return (m0, n0), feet


def _grid(lo, hi, h):
    """Grid offsets snap(i h) covering [lo, hi] per axis."""
    axes = []
    for k in range(2):
        i = np.arange(math.floor(lo[k] / h) - 1, math.ceil(hi[k] / h) + 2)
        axes.append(snap(i * h))
    X, Y = np.meshgrid(axes[0], axes[1], indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


@lru_cache(maxsize=65536)
def _minmax_center(feet: tuple, h: float):
    """Min-max center of the normalized triangle with the given feet."""
    T = triangle(*feet)
    sides = T.sides
    F = np.array(feet, dtype=float)
    P = _grid(F.min(axis=0), F.max(axis=0), h)
    f = _side_max(sides, P)
    best = f.min()
    idx = np.nonzero(f <= best + 1e-12)[0]
    order = np.lexsort((P[idx, 1], P[idx, 0]))
    x, y = P[idx[order[0]]]
    return float(x), float(y), float(best)


def _spiked_center(T, h):
    (m0, n0), feet = _normalized(T)
    x, y, k = _minmax_center(feet, float(h))
    return Plane(m0 + x, n0 + y), k


def _check_horizon(T, horizon):
    F = _feet(T)
    c = F.mean(axis=0)
    far = max(euclid(*(f - c)) for f in F)
    if far > horizon:
        raise InsufficientHorizonError(
            f"horizon {horizon} does not contain the feet (farthest is {far:.6g} from their centroid)")


def _side_samples(T, h):
    """Sample points (k, 2) of the planar part of each side, with side index."""
    out, idx = [], []
    for i, s in enumerate(T.sides):
        seg = s.segments[0]
        n = max(int(math.ceil(seg.length / h)), 1)
        u = np.linspace(0.0, 1.0, n + 1)
        p0, p1 = np.array(seg.p0), np.array(seg.p1)
        pts = p0[None, :] + u[:, None] * (p1 - p0)[None, :]
        out.append(pts)
        idx.append(np.full(len(pts), i))
    return np.vstack(out), np.concatenate(idx)


# --------------------------------------------------------------------------
# slim constants
# --------------------------------------------------------------------------


def slim_constant(T: IdealTriangle, horizon: float = 100.0, resolution: float = 0.1) -> float:
    """Least δ (sampled) such that each side lies in the δ-neighbourhood of the other two.

    Spike portions of a side lie on a second side, so only the planar pieces
    (spiked plane) or the core near the median (tree) contribute.
    """
    if isinstance(T.space, SpikedPlane):
        _check_horizon(T, horizon)
        P, idx = _side_samples(T, resolution)
        sides = T.sides
        D = np.array([s.plane_dist(P)[0] for s in sides])
        D[idx, np.arange(len(idx))] = np.inf
        return float(D.min(axis=0).max())
    # past every pairwise branch depth a side runs along a second side, and
    # side distances are piecewise linear with breaks at half-integers
    a, b, c = T.vertices
    core = max(common_prefix(a, b), common_prefix(b, c), common_prefix(a, c)) + 1
    reach = min(horizon, core)
    step = min(resolution, 0.5)
    sides = T.sides
    best = 0.0
    for i, s in enumerate(sides):
        others = [o for j, o in enumerate(sides) if j != i]
        for x in s.sample(step, -reach, reach):
            best = max(best, min(o.distance_to(x) for o in others))
    return best


# --------------------------------------------------------------------------
# E_K
# --------------------------------------------------------------------------


def e_k_set(T: IdealTriangle, K: float, resolution: float = 0.1):
    """Net points within K of all three sides (possibly empty)."""
    if K < 0:
        raise GeometryError("K must be >= 0")
    if isinstance(T.space, SpikedPlane):
        return _spiked_e_k(T, float(K), float(resolution))
    return _tree_e_k(T, K, resolution)


def _spiked_e_k(T, K, h):
    (m0, n0), feet = _normalized(T)
    plane, spikes = _spiked_e_k_normalized(feet, K, h)
    return PointNet(plane + np.array([m0, n0], dtype=float),
                    spikes + np.array([m0, n0, 0.0]) if len(spikes) else spikes)


@lru_cache(maxsize=4096)
def _spiked_e_k_normalized(feet, K, h):
    T = triangle(*feet)
    sides = T.sides
    F = np.array(feet, dtype=float)
    grid = _grid(F.min(axis=0) - K, F.max(axis=0) + K, h)
    samp, _ = _side_samples(T, h)
    P = np.vstack([grid, samp])
    P = P[_side_max(sides, P) <= K + 1e-12]
    # spikes: height t at foot c is within K of a side not climbing c iff t + d(c, side) <= K
    lo = np.ceil(F.min(axis=0) - K - 1e-9).astype(int)
    hi = np.floor(F.max(axis=0) + K + 1e-9).astype(int)
    M, N = np.meshgrid(np.arange(lo[0], hi[0] + 1), np.arange(lo[1], hi[1] + 1), indexing="ij")
    Q = np.column_stack([M.ravel(), N.ravel()]).astype(float)
    D = np.array([s.plane_dist(Q)[0] for s in sides])
    for i, s in enumerate(sides):
        for end in (s.start, s.end):
            D[i, (Q[:, 0] == end.m) & (Q[:, 1] == end.n)] = -np.inf
    top = K - D.max(axis=0)
    rows = []
    for (m, n), t_max in zip(Q[top >= -1e-12], top[top >= -1e-12]):
        t_max = max(float(t_max), 0.0)
        n_h = max(int(math.ceil(t_max / h)), 1)
        for t in np.linspace(0.0, t_max, n_h + 1)[1:]:
            rows.append((m, n, t))
    spikes = np.array(rows, dtype=float) if rows else np.empty((0, 3))
    plane = np.unique(P, axis=0)
    plane.setflags(write=False)
    spikes.setflags(write=False)
    return plane, spikes


def _tree_e_k(T, K, h):
    tree = T.space
    med = tree.median_of_ends(*T.vertices)
    sides = T.sides
    return [p for p in tree.ball_sample(med, K, h)
            if max(s.distance_to(p) for s in sides) <= K + 1e-12]


def _net_diameter(space, net) -> float:
    if isinstance(net, PointNet):
        P = net.plane
        if len(P) > 3:
            try:
                P = P[ConvexHull(P).vertices]
            except QhullError:
                order = np.lexsort((P[:, 1], P[:, 0]))
                P = P[[order[0], order[-1]]]
        # the highest sample on each spike dominates the others for the diameter
        S = net.spikes
        tops = {}
        for m, n, t in S:
            tops[(m, n)] = max(t, tops.get((m, n), 0.0))
        pts = [Plane(float(x), float(y)) for x, y in P]
        pts += [Spike(int(m), int(n), t) for (m, n), t in tops.items()]
        if not pts:
            return 0.0
        return float(space.pairwise(pts).max())
    pts = list(net)
    if not pts:
        return 0.0
    return float(space.pairwise(pts).max())


def e_k_diameter_bound(T: IdealTriangle, K: float, resolution: float = 0.1) -> float:
    net = e_k_set(T, K, resolution)
    if len(net) == 0:
        raise EmptySetError(f"E_K is empty at K={K}")
    return _net_diameter(T.space, net)


# --------------------------------------------------------------------------
# gates
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Gate:
    """Gate pair at a vertex: p on the first side at v, q on the second.

    ``distance`` is d(p, q), ``tail`` the Hausdorff distance between the
    tails [p, v] and [q, v], and ``q_level`` the least K' with q in E_K'.
    """

    vertex: object
    p: object
    q: object
    distance: float
    tail: float
    q_level: float


def _gates_spiked(T, K, h):
    """Gates built as in the continuity argument for slim triangles.

    p is the point of E_K on the first side at v closest to the second side,
    and q is its nearest point there, so d(p, q) <= K. The tails [p, v] and
    [q, v] meet on the spike of v and the distance from [p, v] to [q, v] is
    convex, so their Hausdorff distance is max(d(p, [q, v]), d(q, [p, v])).
    q itself is only guaranteed to lie in E_2K (``q_level`` records where).
    """
    sp = T.space
    sides = T.sides
    net = e_k_set(T, K, h)
    out = []
    for v in T.vertices:
        s1, s2 = T.sides_at(v)
        if len(net.spikes) and np.any((net.spikes[:, 0] == v.m) & (net.spikes[:, 1] == v.n)):
            foot = Plane(float(v.m), float(v.n))
            level = float(_side_max(sides, np.array([foot.foot]))[0])
            out.append(Gate(v, foot, foot, 0.0, 0.0, level))
            continue
        A = net.plane[s1.plane_dist(net.plane)[0] <= 1e-9]
        if len(A) == 0:
            raise EmptySetError(f"E_K misses the side {s1} at K={K}")
        d2, t2 = s2.plane_dist(A)
        i = int(np.argmin(d2))
        p = Plane(*map(float, A[i]))
        q = s2.point_at(float(t2[i]))
        tail = max(sp.ray_from(q, v).distance_to(p), sp.ray_from(p, v).distance_to(q))
        level = float(_side_max(sides, np.array([q.foot]))[0])
        out.append(Gate(v, p, q, float(d2[i]), tail, level))
    return tuple(out)


def gates(T: IdealTriangle, K: float, resolution: float = 0.1):
    """One ``Gate`` per vertex."""
    if isinstance(T.space, SpikedPlane):
        return _gates_spiked(T, K, resolution)
    med = T.space.median_of_ends(*T.vertices)
    return tuple(Gate(v, med, med, 0.0, 0.0, 0.0) for v in T.vertices)


def strict_gate_gap(T: IdealTriangle, K: float, resolution: float = 0.1) -> float:
    """Least d(p, q) over net points p, q of E_K on the two sides at a vertex, maximized over vertices.

    This is the literal reading of the gate statement (both points in E_K);
    it can exceed the triangle's own slim constant on skewed triangles.
    """
    net = e_k_set(T, K, resolution)
    worst = 0.0
    for v in T.vertices:
        s1, s2 = T.sides_at(v)
        if len(net.spikes) and np.any((net.spikes[:, 0] == v.m) & (net.spikes[:, 1] == v.n)):
            continue
        A = net.plane[s1.plane_dist(net.plane)[0] <= 1e-9]
        B = net.plane[s2.plane_dist(net.plane)[0] <= 1e-9]
        if len(A) == 0 or len(B) == 0:
            return math.inf
        D = euclid_arr(A[:, None, 0] - B[None, :, 0], A[:, None, 1] - B[None, :, 1])
        worst = max(worst, float(D.min()))
    return worst


# --------------------------------------------------------------------------
# projection
# --------------------------------------------------------------------------


def center_of(T: IdealTriangle, resolution: float = 0.1):
    """π_X(T): the canonical center only."""
    if isinstance(T.space, SpikedPlane):
        return _spiked_center(T, resolution)[0]
    if isinstance(T.space, RegularTree):
        return T.space.median_of_ends(*T.vertices)
    raise GeometryError(f"no projection for {T.space!r}")


def project(T: IdealTriangle, resolution: float = 0.1, K: float | None = None,
            details: bool = True, horizon: float = 100.0) -> CenterResult:
    """Canonical center of T with its min-max value; E_K data if ``details``."""
    if isinstance(T.space, SpikedPlane):
        center, kmin = _spiked_center(T, resolution)
    elif isinstance(T.space, RegularTree):
        center, kmin = T.space.median_of_ends(*T.vertices), 0.0
    else:
        raise GeometryError(f"no projection for {T.space!r}")
    res = CenterResult(center, kmin, resolution=resolution)
    if details:
        slim = slim_constant(T, horizon, resolution)
        if K is None:
            # tree nets are exact, so no extra net step is needed there
            K = slim if isinstance(T.space, RegularTree) else slim + resolution
        res.K, res.slim = K, slim
        net = e_k_set(T, K, resolution)
        res.E_K_diameter = _net_diameter(T.space, net) if len(net) else None
        res.gates = gates(T, K, resolution)
    return res
