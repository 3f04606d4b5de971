"""Regular tree as the Cayley graph of a group with a free generating set.

Even degree 2k: the free group on k letters, letters ``0..2k-1`` with
``2i`` and ``2i+1`` mutually inverse. Odd degree d: the free product of d
copies of Z/2, every letter its own inverse. Either way every vertex (a
reduced word) has exactly ``degree`` neighbours.

Every point has a *rooted address* ``(s, depth)``: the word ``s`` read from
the identity vertex and the real depth along it. For two points

    d = depth1 + depth2 - 2 * min(common_prefix(s1, s2), depth1, depth2).

Ends are eventually periodic reduced words ``prefix · period^∞``, stored in
a canonical form so that equality of ends is equality of records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import (
    DegeneratePairError,
    GeometryError,
    IncompatibleSpaceError,
    NotAsymptoticError,
)

_EPS = 1e-9


@dataclass(frozen=True)
class TreePoint:
    """Point at distance ``t`` in [0, 1) from vertex ``word`` along the edge
    labelled ``letter`` (which must point away from the identity)."""

    word: tuple
    letter: int | None = None
    t: float = 0.0

    @property
    def depth(self) -> float:
        return len(self.word) + self.t

    @property
    def address(self) -> tuple:
        return self.word + ((self.letter,) if self.t > 0 else ())


@dataclass(frozen=True, order=True)
class TreeEnd:
    """The end ``prefix · period^∞`` (canonical: see ``RegularTree.end``)."""

    prefix: tuple
    period: tuple

    def letters(self, n: int) -> tuple:
        out = list(self.prefix[:n])
        while len(out) < n:
            out.extend(self.period)
        return tuple(out[:n])

    def __str__(self):
        p = "".join(map(str, self.prefix))
        q = "".join(map(str, self.period))
        return f"{p}({q})"


def _primitive(q: tuple) -> tuple:
    n = len(q)
    for k in range(1, n + 1):
        if n % k == 0 and q[:k] * (n // k) == q:
            return q[:k]
    return q


def common_prefix(x, y) -> float:
    """Length of the common prefix of two words or ends (inf if equal ends)."""
    if isinstance(x, TreeEnd) and isinstance(y, TreeEnd):
        if x == y:
            return math.inf
        n = max(len(x.prefix), len(y.prefix)) + len(x.period) * len(y.period) + 1
        x, y = x.letters(n), y.letters(n)
    elif isinstance(x, TreeEnd):
        x = x.letters(len(y))
    elif isinstance(y, TreeEnd):
        y = y.letters(len(x))
    k = 0
    for a, b in zip(x, y):
        if a != b:
            break
        k += 1
    return k


def _letters(x, n: int) -> tuple:
    return x.letters(n) if isinstance(x, TreeEnd) else tuple(x[:n])


class TreeGeodesic:
    """Geodesic between two rooted addresses ``(s1, depth1)`` and ``(s2, depth2)``.

    It climbs ``s1`` from depth1 down to the meeting depth ``m`` and then
    descends ``s2`` to depth2. Parameter 0 sits at the meeting vertex, so
    the domain is ``[m - depth1, depth2 - m]`` (infinite for ends).
    """

    def __init__(self, tree, s1, d1, s2, d2, kind, start, end):
        self.tree = tree
        self.s1, self.d1, self.s2, self.d2 = s1, d1, s2, d2
        self.m = min(common_prefix(s1, s2), d1, d2)
        self.kind = kind
        self.start = start
        self.end = end

    @property
    def lo(self) -> float:
        return self.m - self.d1

    @property
    def hi(self) -> float:
        return self.d2 - self.m

    @property
    def length(self) -> float:
        return self.hi - self.lo

    @property
    def meeting_vertex(self) -> TreePoint:
        return self.tree.point_on(self.s1, self.m)

    def point_at(self, s: float) -> TreePoint:
        if s < self.lo - _EPS or s > self.hi + _EPS:
            raise GeometryError(f"parameter {s} outside [{self.lo}, {self.hi}]")
        if s <= 0:
            return self.tree.point_on(self.s1, min(self.m - s, self.d1))
        return self.tree.point_on(self.s2, min(self.m + s, self.d2))

    def params(self, step, lo=None, hi=None):
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise GeometryError("sampling an infinite geodesic needs finite bounds")
        n = max(int(math.ceil((hi - lo) / step)), 1)
        return np.linspace(lo, hi, n + 1)

    def sample(self, step, lo=None, hi=None):
        return [self.point_at(float(s)) for s in self.params(step, lo, hi)]

    def nearest(self, p) -> tuple[float, float]:
        self.tree.check_point(p)
        u, lx = p.address, p.depth
        best = None
        for sgn, s, top in ((-1, self.s1, self.d1), (1, self.s2, self.d2)):
            k = min(common_prefix(u, s), lx)
            t = min(max(k, self.m), top)
            d = lx + t - 2 * min(k, t)
            cand = (d, sgn * (t - self.m))
            if best is None or cand[0] < best[0] - 1e-12:
                best = cand
        return best

    def distance_to(self, p) -> float:
        return self.nearest(p)[0]

    def __repr__(self):
        return f"TreeGeodesic({self.kind}, {self.start} -> {self.end})"


class RegularTree:
    """Degree-regular tree; ``depth_cap`` bounds enumerations of ends."""

    kind = "tree"

    def __init__(self, degree: int = 4, depth_cap: int = 6):
        if degree < 2:
            raise GeometryError("tree degree must be >= 2")
        self.degree = int(degree)
        self.depth_cap = int(depth_cap)
        self.free = self.degree % 2 == 0

    def __repr__(self):
        return f"RegularTree(degree={self.degree}, depth_cap={self.depth_cap})"

    # ---- words
    def inv(self, x: int) -> int:
        if self.free:
            return x ^ 1
        return x

    def inverse_word(self, w: Sequence[int]) -> tuple:
        return tuple(self.inv(x) for x in reversed(w))

    def reduce(self, w: Sequence[int]) -> tuple:
        out: list = []
        for x in w:
            if not 0 <= x < self.degree:
                raise GeometryError(f"letter {x} outside alphabet of size {self.degree}")
            if out and out[-1] == self.inv(x):
                out.pop()
            else:
                out.append(x)
        return tuple(out)

    def is_reduced(self, w: Sequence[int]) -> bool:
        return all(w[i + 1] != self.inv(w[i]) for i in range(len(w) - 1))

    # ---- constructors
    def vertex(self, word: Sequence[int]) -> TreePoint:
        return TreePoint(self.reduce(word))

    def point(self, word: Sequence[int], letter: int, t: float) -> TreePoint:
        """Point at fraction t along the edge from ``word`` via ``letter``, canonicalized."""
        word = self.reduce(word)
        if not 0 <= t <= 1:
            raise GeometryError("edge offset must lie in [0, 1]")
        if t == 0:
            return TreePoint(word)
        if word and word[-1] == self.inv(letter):
            return self.point(word[:-1], word[-1], 1.0 - t) if t < 1 else TreePoint(word[:-1])
        if t == 1:
            return TreePoint(word + (letter,))
        return TreePoint(word, letter, float(t))

    def point_on(self, s, depth: float) -> TreePoint:
        """The point at the given depth along a word or end."""
        k = int(math.floor(depth + _EPS))
        frac = depth - k
        if frac < _EPS:
            return TreePoint(_letters(s, k))
        w = _letters(s, k + 1)
        return TreePoint(w[:k], w[k], frac)

    def end(self, prefix: Sequence[int], period: Sequence[int]) -> TreeEnd:
        p, q = tuple(prefix), tuple(period)
        if not q:
            raise GeometryError("end needs a nonempty period")
        if not self.is_reduced(q + q) or not self.is_reduced(p + q):
            raise GeometryError(f"{p}({q}) is not a reduced infinite word")
        q = _primitive(q)
        while p and p[-1] == q[-1]:
            p = p[:-1]
            q = (q[-1],) + q[:-1]
        return TreeEnd(p, q)

    def ends_at_depth(self, k: int) -> list[TreeEnd]:
        """One end through each reduced word of length k (distinct words diverge before depth k)."""
        out = []
        for w in self._words(k):
            out.append(self.end(w, self._tail(w[-1] if w else None)))
        return out

    def _tail(self, last):
        if self.free:
            return (last if last is not None else 0,)
        y = min(x for x in range(self.degree) if x != last)
        z = min(x for x in range(self.degree) if x != y)
        return (y, z)

    def _words(self, k: int):
        words = [()]
        for _ in range(k):
            words = [w + (x,) for w in words for x in range(self.degree)
                     if not w or x != self.inv(w[-1])]
        return words

    def boundary_points(self, window: int | None = None) -> list[TreeEnd]:
        return self.ends_at_depth(self.depth_cap if window is None else int(window))

    # ---- checks
    def check_point(self, p):
        if not isinstance(p, TreePoint):
            raise IncompatibleSpaceError(f"{p!r} is not a tree point")
        if any(not 0 <= x < self.degree for x in p.address) or not self.is_reduced(p.address):
            raise IncompatibleSpaceError(f"{p!r} does not live in {self!r}")
        return p

    def check_end(self, a):
        if not isinstance(a, TreeEnd):
            raise IncompatibleSpaceError(f"{a!r} is not an end of the tree")
        return a

    # ---- metric
    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        k = common_prefix(p.address, q.address)
        return p.depth + q.depth - 2 * min(k, p.depth, q.depth)

    def pairwise(self, points):
        n = len(points)
        D = np.zeros((n, n))
        for i in range(n):
            for j in range(i + 1, n):
                D[i, j] = D[j, i] = self.distance(points[i], points[j])
        return D

    def gromov_product_ends(self, a: TreeEnd, b: TreeEnd) -> float:
        """(a|b) based at the identity: the common prefix length of the two ends."""
        return common_prefix(a, b)

    # ---- geodesics
    def geodesic(self, p, q) -> TreeGeodesic:
        self.check_point(p)
        self.check_point(q)
        return TreeGeodesic(self, p.address, p.depth, q.address, q.depth, "finite", p, q)

    def ray_from(self, x, a) -> TreeGeodesic:
        self.check_point(x)
        self.check_end(a)
        return TreeGeodesic(self, x.address, x.depth, a, math.inf, "ray", x, a)

    def bi_infinite_geodesic(self, a, b) -> TreeGeodesic:
        self.check_end(a)
        self.check_end(b)
        if a == b:
            raise DegeneratePairError(f"bi-infinite geodesic needs distinct ends, got {a} twice")
        return TreeGeodesic(self, a, math.inf, b, math.inf, "bi-infinite", a, b)

    def side_distance(self, x, side) -> float:
        return side.distance_to(x)

    def median_of_ends(self, a, b, c) -> TreePoint:
        """Center of the ideal tripod: the deepest pairwise branch vertex."""
        ends = (a, b, c)
        if len(set(ends)) < 3:
            raise DegeneratePairError("median needs three distinct ends")
        best = max(((common_prefix(u, v), u) for u, v in ((a, b), (a, c), (b, c))),
                   key=lambda t: t[0])
        return self.point_on(best[1], best[0])

    # ---- balls
    def ball_sample(self, center, radius: float, resolution: float) -> list[TreePoint]:
        self.check_point(center)
        if resolution <= 0:
            raise GeometryError("resolution must be positive")
        if radius < 0:
            raise GeometryError("radius must be >= 0")
        if radius == 0:
            return [center]
        # vertices within radius + 1, then sample the edges between them
        start = [center.word] + ([center.word + (center.letter,)] if center.t > 0 else [])
        seen = set(start)
        frontier = list(start)
        while frontier:
            nxt = []
            for w in frontier:
                for v in self._neighbours(w):
                    if v not in seen and self.distance(center, TreePoint(v)) <= radius + 1:
                        seen.add(v)
                        nxt.append(v)
            frontier = nxt
        out = {center}
        for w in seen:
            for x in range(self.degree):
                if w and x == self.inv(w[-1]):
                    continue
                ts = self._edge_offsets(center, w, x, radius, resolution)
                for t in ts:
                    out.add(self.point(w, x, t))
        return sorted(out, key=lambda p: (p.word, p.letter if p.letter is not None else -1, p.t))

    def _neighbours(self, w):
        out = [w[:-1]] if w else []
        for x in range(self.degree):
            if not w or x != self.inv(w[-1]):
                out.append(w + (x,))
        return out

    def _edge_offsets(self, center, w, x, r, h):
        d0 = self.distance(center, TreePoint(w))
        d1 = self.distance(center, TreePoint(w + (x,)))
        if min(d0, d1) > r:
            return []
        n = max(int(math.ceil(1.0 / h)), 1)
        ts = [i / n for i in range(n + 1)]

        def dist(t):
            # distance along the edge is piecewise linear with slopes +-1
            return min(d0 + t, d1 + 1 - t) if not self._on_edge(center, w, x) else abs(t - center.t)
        keep = [t for t in ts if dist(t) <= r + _EPS]
        # rim: the exact points where the edge leaves the ball
        for t in (r - d0, 1 - (r - d1)):
            if 0 <= t <= 1 and abs(dist(t) - r) < 1e-9:
                keep.append(t)
        if self._on_edge(center, w, x):
            keep += [t for t in (center.t - r, center.t + r) if 0 <= t <= 1]
        return keep

    @staticmethod
    def _on_edge(center, w, x):
        return center.t > 0 and center.word == w and center.letter == x

    # ---- group action
    def act(self, g, obj):
        g = tuple(g)
        if self.reduce(g) != g:
            raise IncompatibleSpaceError(f"{g} is not a reduced word")
        if isinstance(obj, TreePoint):
            base = self.reduce(g + obj.word)
            if obj.t == 0:
                return TreePoint(base)
            return self.point(base, obj.letter, obj.t)
        if isinstance(obj, TreeEnd):
            k = len(g) // len(obj.period) + 2
            w = self.reduce(g + obj.prefix + obj.period * k)
            return self.end(w, obj.period)
        if isinstance(obj, TreeGeodesic):
            ends = [self.act(g, e) for e in (obj.start, obj.end)]
            if obj.kind == "bi-infinite":
                return self.bi_infinite_geodesic(*ends)
            if obj.kind == "ray":
                return self.ray_from(*ends)
            return self.geodesic(*ends)
        raise IncompatibleSpaceError(f"cannot act on {obj!r}")

    def asymptotic_hausdorff(self, alpha, beta, horizon: float, step: float = 0.05) -> float:
        if alpha.kind != "ray" or beta.kind != "ray":
            raise GeometryError("asymptotic_hausdorff expects rays")
        if alpha.end != beta.end:
            raise NotAsymptoticError(f"rays end at {alpha.end} and {beta.end}")
        o = alpha.point_at(alpha.lo)
        off = self.distance(o, beta.start)
        a_pts = alpha.sample(step, alpha.lo, alpha.lo + horizon)
        b_pts = [q for q in beta.sample(step, beta.lo, beta.lo + horizon + off)
                 if self.distance(o, q) <= horizon + _EPS]
        return max(max((beta.distance_to(p) for p in a_pts), default=0.0),
                   max((alpha.distance_to(q) for q in b_pts), default=0.0))
