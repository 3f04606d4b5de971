"""Metric graph built from a weighted edge list, with shortest-path geodesics.

Only finite geodesics exist here; boundary operations raise
``UnsupportedSpaceError``. The space exists to benchmark the brute-force
contracting oracle on something other than the closed-form model spaces.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

from ..errors import ConfigError, GeometryError, IncompatibleSpaceError, UnsupportedSpaceError

_EPS = 1e-9


@dataclass(frozen=True)
class GraphPoint:
    """Point at offset ``t`` from vertex ``u`` towards ``v`` (edge index ``e``).

    Vertices are ``GraphPoint(u, u, 0.0, -1)``; use ``GraphSpace.vertex``.
    """

    u: int
    v: int
    t: float
    e: int = -1


class GraphGeodesic:
    """Shortest path as a list of (edge-or-vertex) pieces on [0, length]."""

    def __init__(self, space, stops, start, end):
        # stops: list of (param, point) at the path's vertices and endpoints
        self.space = space
        self.stops = stops
        self.kind = "finite"
        self.start = start
        self.end = end
        self._params = [s for s, _ in stops]

    @property
    def lo(self):
        return 0.0

    @property
    def hi(self):
        return self._params[-1]

    @property
    def length(self):
        return self.hi

    def point_at(self, s):
        if s < -_EPS or s > self.hi + _EPS:
            raise GeometryError(f"parameter {s} outside [0, {self.hi}]")
        i = bisect.bisect_right(self._params, s) - 1
        i = min(max(i, 0), len(self.stops) - 2) if len(self.stops) > 1 else 0
        s0, p0 = self.stops[i]
        if len(self.stops) == 1 or s <= s0:
            return p0
        s1, p1 = self.stops[i + 1]
        if s >= s1:
            return p1
        return self.space.between(p0, p1, s - s0)

    def params(self, step, lo=None, hi=None):
        lo = 0.0 if lo is None else max(lo, 0.0)
        hi = self.hi if hi is None else min(hi, self.hi)
        n = max(int(math.ceil((hi - lo) / step)), 1)
        return np.linspace(lo, hi, n + 1)

    def sample(self, step, lo=None, hi=None):
        return [self.point_at(float(s)) for s in self.params(step, lo, hi)]

    def nearest_range(self, p):
        """Distance to the path and the (min, max) parameters attaining it.

        Along any piece the distance to ``p`` is a tent of slopes +-1, so
        minimizers live at the piece ends or at ``p`` itself.
        """
        cands = [(self.space.distance(p, q), s) for s, q in self.stops]
        for (s0, q0), (s1, q1) in zip(self.stops, self.stops[1:]):
            off = self.space.offset_on(p, q0, q1)
            if off is not None and 0 <= off <= s1 - s0:
                cands.append((0.0, s0 + off))
        d = min(c[0] for c in cands)
        ss = [s for c, s in cands if c <= d + _EPS]
        return d, min(ss), max(ss)

    def nearest(self, p):
        d, s, _ = self.nearest_range(p)
        return d, s

    def distance_to(self, p):
        return self.nearest_range(p)[0]


class GraphSpace:
    kind = "graph"

    def __init__(self, edges):
        """``edges``: iterable of (u, v, weight) with 1-based vertex ids."""
        edges = [(int(u), int(v), float(w)) for u, v, w in edges]
        if not edges:
            raise ConfigError("graph needs at least one edge")
        for u, v, w in edges:
            if u < 1 or v < 1:
                raise ConfigError("vertex ids are 1-based")
            if not w > 0 or not math.isfinite(w):
                raise ConfigError(f"edge weight must be positive, got {w}")
            if u == v:
                raise ConfigError("loops are not allowed")
        self.edges = edges
        self.n = max(max(u, v) for u, v, _ in edges)
        rows = [u - 1 for u, v, _ in edges] + [v - 1 for u, v, _ in edges]
        cols = [v - 1 for u, v, _ in edges] + [u - 1 for u, v, _ in edges]
        ws = [w for *_, w in edges] * 2
        # keep the lightest of parallel edges for path lengths
        dense = {}
        for r, c, w in zip(rows, cols, ws):
            dense[(r, c)] = min(w, dense.get((r, c), math.inf))
        rc = list(dense)
        mat = csr_matrix(([dense[k] for k in rc], ([k[0] for k in rc], [k[1] for k in rc])),
                         shape=(self.n, self.n))
        self.apsp, self.pred = shortest_path(mat, directed=False, return_predecessors=True)

    @classmethod
    def from_file(cls, path) -> "GraphSpace":
        edges = []
        for ln, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ConfigError(f"{path}:{ln}: expected 'u v weight'")
            try:
                edges.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ConfigError(f"{path}:{ln}: {exc}") from None
        return cls(edges)

    def __repr__(self):
        return f"GraphSpace(n={self.n}, edges={len(self.edges)})"

    # ---- points
    def vertex(self, u: int) -> GraphPoint:
        if not 1 <= u <= self.n:
            raise GeometryError(f"no vertex {u}")
        return GraphPoint(u, u, 0.0, -1)

    def edge_point(self, e: int, t: float) -> GraphPoint:
        u, v, w = self.edges[e]
        if not 0 <= t <= w:
            raise GeometryError(f"offset {t} outside edge of length {w}")
        if t == 0:
            return self.vertex(u)
        if t == w:
            return self.vertex(v)
        return GraphPoint(u, v, float(t), e)

    def check_point(self, p):
        if not isinstance(p, GraphPoint) or not 1 <= p.u <= self.n:
            raise IncompatibleSpaceError(f"{p!r} is not a point of {self!r}")
        return p

    def _ends(self, p):
        """(vertex, distance) pairs for the endpoints of p's edge."""
        if p.e < 0:
            return [(p.u, 0.0)]
        w = self.edges[p.e][2]
        return [(p.u, p.t), (p.v, w - p.t)]

    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        best = min(a + self.apsp[x - 1, y - 1] + b for x, a in self._ends(p) for y, b in self._ends(q))
        if p.e >= 0 and p.e == q.e:
            best = min(best, abs(p.t - q.t))
        return float(best)

    def pairwise(self, points):
        n = len(points)
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = self.distance(points[i], points[j])
        return D

    def between(self, p0, p1, s):
        """Point at distance s from p0 towards p1, where they share an edge."""
        if p0 == p1:
            return p0
        e = p0.e if p0.e >= 0 else p1.e
        if e < 0:
            e = self._edge_index(p0.u, p1.u)
        u, v, w = self.edges[e]
        t0 = self._offset(p0, e)
        t1 = self._offset(p1, e)
        t = t0 + s if t1 >= t0 else t0 - s
        return self.edge_point(e, min(max(t, 0.0), w))

    def _offset(self, p, e):
        u, v, w = self.edges[e]
        if p.e == e:
            return p.t
        return 0.0 if p.u == u else w

    def offset_on(self, p, q0, q1):
        """Offset of p from q0 along the piece q0-q1, or None if p is not on it."""
        if p.e < 0:
            return None
        e = q0.e if q0.e >= 0 else q1.e
        if e < 0:
            e = self._edge_index(q0.u, q1.u)
        if e != p.e:
            return None
        return abs(p.t - self._offset(q0, e))

    def _edge_index(self, a, b):
        best = None
        for i, (u, v, w) in enumerate(self.edges):
            if {u, v} == {a, b} and (best is None or w < self.edges[best][2]):
                best = i
        if best is None:
            raise GeometryError(f"no edge between {a} and {b}")
        return best

    # ---- geodesics
    def geodesic(self, p, q) -> GraphGeodesic:
        self.check_point(p)
        self.check_point(q)
        d = self.distance(p, q)
        if p.e >= 0 and p.e == q.e and abs(abs(p.t - q.t) - d) < _EPS:
            return GraphGeodesic(self, [(0.0, p), (d, q)], p, q)
        x, a, y, b = min(((x, a, y, b) for x, a in self._ends(p) for y, b in self._ends(q)),
                         key=lambda r: r[1] + self.apsp[r[0] - 1, r[2] - 1] + r[3])
        path = [y]
        while path[-1] != x:
            path.append(int(self.pred[x - 1, path[-1] - 1]) + 1)
        path.reverse()
        stops = [] if a == 0 else [(0.0, p)]
        s = a
        for i, v in enumerate(path):
            if i:
                s += self.edges[self._edge_index(path[i - 1], v)][2]
            stops.append((s, self.vertex(v)))
        if b > 0:
            stops.append((s + b, q))
        return GraphGeodesic(self, stops, p, q)

    def bi_infinite_geodesic(self, a, b):
        raise UnsupportedSpaceError("graph spaces have no boundary")

    def ray_from(self, x, a):
        raise UnsupportedSpaceError("graph spaces have no boundary")

    def asymptotic_hausdorff(self, alpha, beta, horizon, step=0.05):
        raise UnsupportedSpaceError("graph spaces have no boundary")

    def act(self, g, obj):
        raise UnsupportedSpaceError("no group action is attached to a bare graph")

    def side_distance(self, x, side):
        return side.distance_to(x)

    def ball_sample(self, center, radius: float, resolution: float) -> list[GraphPoint]:
        self.check_point(center)
        if resolution <= 0:
            raise GeometryError("resolution must be positive")
        if radius < 0:
            raise GeometryError("radius must be >= 0")
        out = {center}
        for e, (u, v, w) in enumerate(self.edges):
            du = self.distance(center, self.vertex(u))
            dv = self.distance(center, self.vertex(v))
            n = max(int(math.ceil(w / resolution)), 1)
            ts = list(np.linspace(0.0, w, n + 1))
            ts += [radius - du, w - (radius - dv)]
            if center.e == e:
                ts += [center.t - radius, center.t + radius]
            for t in ts:
                if 0 <= t <= w:
                    p = self.edge_point(e, float(t))
                    if self.distance(center, p) <= radius + _EPS:
                        out.add(p)
        return sorted(out, key=lambda p: (p.u, p.v, p.t))
