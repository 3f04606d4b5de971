"""The spiked plane: R^2 with a vertical ray glued at every lattice point of Z^2.

Points are ``Plane(x, y)`` or ``Spike(m, n, t)`` (height ``t`` on the ray at
the lattice point ``(m, n)``); ``Spike(m, n, 0)`` and ``Plane(m, n)`` are the
same point. The boundary is the discrete set of rays, ``SpikeEnd(m, n)``.

Metric, by case:

* plane - plane: Euclidean distance;
* spike - plane: ``t`` plus the Euclidean distance from the foot;
* spike - spike, distinct feet: ``t1 + t2`` plus the distance between feet;
* spike - spike, same foot: ``|t1 - t2|``.

Any path leaving a spike must pass through its foot, and a detour up a spike
only adds length, so these are exact. Geodesics are unique: descend the first
spike, follow the straight segment between the feet, climb the second spike.
Every geodesic is a list of pieces (``Segment`` or ``SpikeRun``) on a common
unit-speed parameter.

Coordinates of resolution nets are snapped to multiples of 2**-30 so that
adding an integer translation is exact in floating point.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..errors import (
    DegeneratePairError,
    GeometryError,
    IncompatibleSpaceError,
    NotAsymptoticError,
)

SNAP = 2.0 ** 30
_TOL = 1e-9


def snap(v):
    """Round to the dyadic grid 2**-30 (arrays or scalars)."""
    return np.round(np.asarray(v, dtype=float) * SNAP) / SNAP


def euclid(dx: float, dy: float) -> float:
    # argument order canonicalized so that lattice isometries preserve it bit-for-bit
    a, b = abs(dx), abs(dy)
    if a < b:
        a, b = b, a
    return math.hypot(a, b)


def euclid_arr(dx, dy):
    a, b = np.abs(dx), np.abs(dy)
    return np.hypot(np.maximum(a, b), np.minimum(a, b))


@dataclass(frozen=True)
class Plane:
    x: float
    y: float

    def __post_init__(self):
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise GeometryError(f"non-finite plane point {self!r}")

    @property
    def foot(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def height(self) -> float:
        return 0.0


@dataclass(frozen=True)
class Spike:
    m: int
    n: int
    t: float

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n:
            raise GeometryError("spike feet are lattice points")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "t", float(self.t))
        if not math.isfinite(self.t) or self.t < 0:
            raise GeometryError(f"spike height must be finite and >= 0, got {self.t}")

    @property
    def foot(self) -> tuple[float, float]:
        return (float(self.m), float(self.n))

    @property
    def height(self) -> float:
        return self.t


@dataclass(frozen=True, order=True)
class SpikeEnd:
    """The boundary point r_{m,n}."""

    m: int
    n: int

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n:
            raise GeometryError("spike ends are indexed by lattice points")
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))

    @property
    def foot(self) -> tuple[int, int]:
        return (self.m, self.n)

    def __str__(self):
        return f"r({self.m},{self.n})"


SpikedPoint = Plane | Spike


def _on_spike(p) -> bool:
    return isinstance(p, Spike)


# --------------------------------------------------------------------------
# geodesic pieces
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Straight planar piece from ``p0`` (at parameter ``lo``) to ``p1``."""

    p0: tuple[float, float]
    p1: tuple[float, float]
    lo: float

    def __post_init__(self):
        object.__setattr__(self, "p0", (float(self.p0[0]), float(self.p0[1])))
        object.__setattr__(self, "p1", (float(self.p1[0]), float(self.p1[1])))
        object.__setattr__(self, "lo", float(self.lo))

    @property
    def length(self) -> float:
        return euclid(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1])

    @property
    def hi(self) -> float:
        return self.lo + self.length

    def point(self, s: float) -> Plane:
        ell = self.length
        u = 0.0 if ell == 0 else min(max((s - self.lo) / ell, 0.0), 1.0)
        if u == 0.0:
            return Plane(*self.p0)
        if u == 1.0:
            return Plane(*self.p1)
        return Plane(self.p0[0] + u * (self.p1[0] - self.p0[0]),
                     self.p0[1] + u * (self.p1[1] - self.p0[1]))

    def _foot_param(self, qx, qy):
        ell = self.length
        dx, dy = self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]
        if ell == 0:
            t = np.zeros_like(np.asarray(qx, dtype=float))
        else:
            t = np.clip(((qx - self.p0[0]) * dx + (qy - self.p0[1]) * dy) / ell, 0.0, ell)
        fx = self.p0[0] + (t / ell if ell else 0.0) * dx
        fy = self.p0[1] + (t / ell if ell else 0.0) * dy
        return euclid_arr(qx - fx, qy - fy), self.lo + t

    def plane_dist(self, P):
        return self._foot_param(P[:, 0], P[:, 1])

    def spike_dist(self, S):
        d, s = self._foot_param(S[:, 0], S[:, 1])
        return d + S[:, 2], s

    def mapped(self, fn) -> "Segment":
        return Segment(fn(self.p0), fn(self.p1), self.lo)


@dataclass(frozen=True)
class SpikeRun:
    """Piece on the spike at ``foot``: height(s) = c + slope * s on [lo, hi]."""

    foot: tuple[int, int]
    lo: float
    hi: float
    c: float
    slope: int

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def height(self, s: float) -> float:
        return max(self.c + self.slope * s, 0.0)

    @property
    def h_min(self) -> float:
        return self.c + self.lo if self.slope > 0 else self.c - self.hi

    @property
    def h_max(self) -> float:
        return self.c + self.hi if self.slope > 0 else self.c - self.lo

    @property
    def s_at_min(self) -> float:
        return self.lo if self.slope > 0 else self.hi

    def point(self, s: float) -> Spike:
        s = min(max(s, self.lo), self.hi)
        return Spike(self.foot[0], self.foot[1], self.height(s))

    def plane_dist(self, P):
        d = euclid_arr(P[:, 0] - self.foot[0], P[:, 1] - self.foot[1]) + self.h_min
        return d, np.full(len(P), self.s_at_min)

    def spike_dist(self, S):
        same = (S[:, 0] == self.foot[0]) & (S[:, 1] == self.foot[1])
        hc = np.clip(S[:, 2], self.h_min, self.h_max)
        d_same = np.abs(S[:, 2] - hc)
        s_same = (hc - self.c) / self.slope
        d_other = S[:, 2] + euclid_arr(S[:, 0] - self.foot[0], S[:, 1] - self.foot[1]) + self.h_min
        return np.where(same, d_same, d_other), np.where(same, s_same, self.s_at_min)

    def mapped(self, fn) -> "SpikeRun":
        f = fn(self.foot)
        return SpikeRun((int(f[0]), int(f[1])), self.lo, self.hi, self.c, self.slope)


class Geodesic:
    """Unit-speed geodesic made of consecutive pieces on [lo, hi].

    ``kind`` is ``finite``, ``ray`` or ``bi-infinite``; ``start``/``end`` are
    the endpoints (a point, or a ``SpikeEnd`` on an infinite side).
    """

    def __init__(self, pieces: Sequence, kind: str, start, end):
        if not pieces:
            raise GeometryError("geodesic needs at least one piece")
        self.pieces = tuple(pieces)
        self.kind = kind
        self.start = start
        self.end = end
        self._his = [p.hi for p in self.pieces]

    @property
    def lo(self) -> float:
        return self.pieces[0].lo

    @property
    def hi(self) -> float:
        return self.pieces[-1].hi

    @property
    def length(self) -> float:
        return self.hi - self.lo

    def point_at(self, s: float):
        if s < self.lo - _TOL or s > self.hi + _TOL:
            raise GeometryError(f"parameter {s} outside [{self.lo}, {self.hi}]")
        i = min(bisect.bisect_left(self._his, s), len(self.pieces) - 1)
        return self.pieces[i].point(s)

    def params(self, step: float, lo: float | None = None, hi: float | None = None) -> np.ndarray:
        lo = self.lo if lo is None else max(lo, self.lo)
        hi = self.hi if hi is None else min(hi, self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise GeometryError("sampling an infinite geodesic needs finite bounds")
        n = max(int(math.ceil((hi - lo) / step)), 1)
        return np.linspace(lo, hi, n + 1)

    def sample(self, step: float, lo: float | None = None, hi: float | None = None) -> list:
        return [self.point_at(float(s)) for s in self.params(step, lo, hi)]

    @property
    def segments(self) -> list[Segment]:
        return [p for p in self.pieces if isinstance(p, Segment)]

    @property
    def feet(self) -> list[tuple[int, int]]:
        return [p.foot for p in self.pieces if isinstance(p, SpikeRun)]

    def planar_points(self) -> np.ndarray:
        """Corners of the planar shadow of the geodesic (segment ends, spike feet)."""
        pts = []
        for p in self.pieces:
            if isinstance(p, Segment):
                pts += [p.p0, p.p1]
            else:
                pts.append(p.foot)
        return np.array(pts, dtype=float)

    def plane_dist(self, P: np.ndarray):
        """Distance and nearest parameter for an (k, 2) array of plane points."""
        return _best(piece.plane_dist(P) for piece in self.pieces)

    def spike_dist(self, S: np.ndarray):
        """Same for an (k, 3) array of spike points (m, n, t)."""
        return _best(piece.spike_dist(S) for piece in self.pieces)

    def distance_to(self, p) -> float:
        return float(self.nearest(p)[0])

    def nearest(self, p) -> tuple[float, float]:
        if isinstance(p, Plane):
            d, s = self.plane_dist(np.array([[p.x, p.y]]))
        elif isinstance(p, Spike):
            d, s = self.spike_dist(np.array([[p.m, p.n, p.t]], dtype=float))
        else:
            raise IncompatibleSpaceError(f"{p!r} is not a spiked-plane point")
        return float(d[0]), float(s[0])

    def mapped(self, fn_xy, fn_end) -> "Geodesic":
        pieces = [p.mapped(fn_xy) for p in self.pieces]
        return Geodesic(pieces, self.kind, fn_end(self.start), fn_end(self.end))

    def __repr__(self):
        return f"Geodesic({self.kind}, {self.start} -> {self.end}, {len(self.pieces)} pieces)"


def _best(results):
    best_d = best_s = None
    for d, s in results:
        if best_d is None:
            best_d, best_s = d.astype(float), s.astype(float)
            continue
        better = d < best_d - 1e-12
        best_d = np.where(better, d, best_d)
        best_s = np.where(better, s, best_s)
    return best_d, best_s


# --------------------------------------------------------------------------
# resolution nets
# --------------------------------------------------------------------------


@dataclass
class PointNet:
    """A finite point set: ``plane`` (k, 2) coordinates and ``spikes`` (j, 3) rows."""

    plane: np.ndarray
    spikes: np.ndarray

    def __len__(self):
        return len(self.plane) + len(self.spikes)

    def __iter__(self) -> Iterator:
        for x, y in self.plane:
            yield Plane(float(x), float(y))
        for m, n, t in self.spikes:
            yield Spike(int(m), int(n), float(t))

    def __contains__(self, p):
        if isinstance(p, Plane):
            return bool(np.any((self.plane[:, 0] == p.x) & (self.plane[:, 1] == p.y)))
        if isinstance(p, Spike):
            s = self.spikes
            return bool(np.any((s[:, 0] == p.m) & (s[:, 1] == p.n) & (s[:, 2] == p.t)))
        return False


def disk_grid(cx: float, cy: float, r: float, h: float) -> np.ndarray:
    """Grid points center + (i h, j h) within distance r, offsets snapped."""
    k = int(math.floor(r / h + _TOL))
    i = np.arange(-k, k + 1)
    off = snap(i * h)
    ox, oy = np.meshgrid(off, off, indexing="ij")
    keep = ox ** 2 + oy ** 2 <= r * r + _TOL
    return np.column_stack([cx + ox[keep], cy + oy[keep]])


def _rim(cx, cy, r, h):
    n = max(8, int(math.ceil(2 * math.pi * r / (h / 4))))
    th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    return np.column_stack([cx + r * np.cos(th), cy + r * np.sin(th)])


def _heights(lo, hi, h):
    if hi < lo:
        return np.empty(0)
    n = max(int(math.ceil((hi - lo) / h)), 1)
    return np.linspace(lo, hi, n + 1)


def lattice_in_disk(cx, cy, r):
    """Integer points (m, n) within distance r of (cx, cy)."""
    m = np.arange(math.ceil(cx - r - _TOL), math.floor(cx + r + _TOL) + 1)
    n = np.arange(math.ceil(cy - r - _TOL), math.floor(cy + r + _TOL) + 1)
    M, N = np.meshgrid(m, n, indexing="ij")
    d = euclid_arr(M - cx, N - cy)
    keep = d <= r + _TOL
    return M[keep].astype(int), N[keep].astype(int), d[keep]


# --------------------------------------------------------------------------
# lattice isometries
# --------------------------------------------------------------------------

_D4 = {(1, 0, 0, 1), (0, -1, 1, 0), (-1, 0, 0, -1), (0, 1, -1, 0),
       (1, 0, 0, -1), (-1, 0, 0, 1), (0, 1, 1, 0), (0, -1, -1, 0)}


@dataclass(frozen=True)
class LatticeIsometry:
    """x -> L x + t with L in the dihedral group of the square and t in Z^2."""

    linear: tuple[int, int, int, int] = (1, 0, 0, 1)
    shift: tuple[int, int] = (0, 0)

    def __post_init__(self):
        if tuple(self.linear) not in _D4:
            raise GeometryError(f"{self.linear} is not a lattice-preserving orthogonal matrix")
        if any(int(v) != v for v in self.shift):
            raise GeometryError("translation part must be integral")

    @classmethod
    def translation(cls, a: int, b: int) -> "LatticeIsometry":
        return cls((1, 0, 0, 1), (int(a), int(b)))

    @classmethod
    def axis_swap(cls) -> "LatticeIsometry":
        return cls((0, 1, 1, 0), (0, 0))

    def apply_xy(self, xy):
        a, b, c, d = self.linear
        x, y = xy
        # entries are 0/+-1 so each product is exact
        return (_lin(a, x, b, y) + self.shift[0], _lin(c, x, d, y) + self.shift[1])

    def inverse(self) -> "LatticeIsometry":
        a, b, c, d = self.linear
        inv = (a, c, b, d)
        tx, ty = self.shift
        sx = -(inv[0] * tx + inv[1] * ty)
        sy = -(inv[2] * tx + inv[3] * ty)
        return LatticeIsometry(inv, (sx, sy))

    def compose(self, other: "LatticeIsometry") -> "LatticeIsometry":
        """self after other."""
        a, b, c, d = self.linear
        e, f, g, h = other.linear
        lin = (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)
        sx, sy = self.apply_xy(other.shift)
        return LatticeIsometry(lin, (int(sx), int(sy)))

    @property
    def is_identity(self) -> bool:
        return self.linear == (1, 0, 0, 1) and tuple(self.shift) == (0, 0)


def _lin(a, x, b, y):
    if a == 0:
        return b * y if b else 0.0
    if b == 0:
        return a * x
    return a * x + b * y


# --------------------------------------------------------------------------
# the space
# --------------------------------------------------------------------------


class SpikedPlane:
    """Spiked plane; ``window`` bounds the boundary points enumerated by samplers."""

    kind = "spiked_plane"

    def __init__(self, window: int = 10):
        self.window = int(window)

    def __repr__(self):
        return f"SpikedPlane(window={self.window})"

    # ---- basic checks
    def check_point(self, p):
        if not isinstance(p, (Plane, Spike)):
            raise IncompatibleSpaceError(f"{p!r} is not a point of the spiked plane")
        return p

    def check_end(self, a):
        if not isinstance(a, SpikeEnd):
            raise IncompatibleSpaceError(f"{a!r} is not a boundary point of the spiked plane")
        return a

    def boundary_points(self, window: int | None = None) -> list[SpikeEnd]:
        w = self.window if window is None else int(window)
        return [SpikeEnd(m, n) for m in range(-w, w + 1) for n in range(-w, w + 1)]

    # ---- metric
    def distance(self, p, q) -> float:
        self.check_point(p)
        self.check_point(q)
        fp, fq = p.foot, q.foot
        F = euclid(fp[0] - fq[0], fp[1] - fq[1])
        if _on_spike(p) and _on_spike(q) and fp == fq:
            return abs(p.t - q.t)
        return p.height + q.height + F

    def pairwise(self, points: Sequence) -> np.ndarray:
        """Distance matrix of a list of points (vectorized case analysis)."""
        A = np.array([[*pt.foot, pt.height, 1.0 if _on_spike(pt) else 0.0] for pt in points])
        dx = A[:, None, 0] - A[None, :, 0]
        dy = A[:, None, 1] - A[None, :, 1]
        F = euclid_arr(dx, dy)
        t = A[:, 2]
        both = (A[:, None, 3] > 0) & (A[None, :, 3] > 0) & (F == 0)
        return np.where(both, np.abs(t[:, None] - t[None, :]), t[:, None] + t[None, :] + F)

    # ---- geodesics
    def geodesic(self, p, q) -> Geodesic:
        self.check_point(p)
        self.check_point(q)
        if _on_spike(p) and _on_spike(q) and p.foot == q.foot:
            d = q.t - p.t
            slope = 1 if d >= 0 else -1
            # height(s) = p.t + slope*s on [0, |d|]
            return Geodesic([SpikeRun((p.m, p.n), 0.0, abs(d), p.t, slope)], "finite", p, q)
        pieces = []
        s = 0.0
        if _on_spike(p) and p.t > 0:
            pieces.append(SpikeRun((p.m, p.n), 0.0, p.t, p.t, -1))
            s = p.t
        seg = Segment(p.foot, q.foot, s)
        if seg.length > 0 or not pieces:
            pieces.append(seg)
            s = seg.hi
        if _on_spike(q) and q.t > 0:
            pieces.append(SpikeRun((q.m, q.n), s, s + q.t, -s, 1))
        return Geodesic(pieces, "finite", p, q)

    def bi_infinite_geodesic(self, a: SpikeEnd, b: SpikeEnd) -> Geodesic:
        self.check_end(a)
        self.check_end(b)
        if a == b:
            raise DegeneratePairError(f"bi-infinite geodesic needs distinct ends, got {a} twice")
        seg = Segment(a.foot, b.foot, 0.0)
        ell = seg.length
        pieces = [SpikeRun(a.foot, -math.inf, 0.0, 0.0, -1), seg,
                  SpikeRun(b.foot, ell, math.inf, -ell, 1)]
        return Geodesic(pieces, "bi-infinite", a, b)

    def ray_from(self, x, a: SpikeEnd) -> Geodesic:
        self.check_point(x)
        self.check_end(a)
        if _on_spike(x) and x.foot == a.foot:
            return Geodesic([SpikeRun(a.foot, 0.0, math.inf, x.t, 1)], "ray", x, a)
        pieces = []
        s = 0.0
        if _on_spike(x) and x.t > 0:
            pieces.append(SpikeRun((x.m, x.n), 0.0, x.t, x.t, -1))
            s = x.t
        seg = Segment(x.foot, (float(a.m), float(a.n)), s)
        if seg.length > 0:
            pieces.append(seg)
            s = seg.hi
        pieces.append(SpikeRun(a.foot, s, math.inf, -s, 1))
        return Geodesic(pieces, "ray", x, a)

    def side_distance(self, x, side: Geodesic) -> float:
        self.check_point(x)
        return side.distance_to(x)

    # ---- balls
    def ball_sample(self, center, radius: float, resolution: float) -> PointNet:
        """Resolution-net of the closed ball: every ball point lies within
        ``resolution`` of a sample. Plane part: a grid of spacing ``resolution``
        plus rim points; spike part: heights at spacing ``resolution``."""
        self.check_point(center)
        if resolution <= 0:
            raise GeometryError("resolution must be positive")
        if radius < 0:
            raise GeometryError("radius must be >= 0")
        h = resolution
        if radius == 0:
            if isinstance(center, Plane):
                return PointNet(np.array([[center.x, center.y]]), np.empty((0, 3)))
            return PointNet(np.empty((0, 2)), np.array([[center.m, center.n, center.t]], dtype=float))
        spikes = []
        plane = np.empty((0, 2))
        cx, cy = center.foot
        if isinstance(center, Spike):
            hs = _heights(max(0.0, center.t - radius), center.t + radius, h)
            spikes.append(np.column_stack([np.full(len(hs), center.m), np.full(len(hs), center.n), hs]))
            r_plane = radius - center.t
        else:
            r_plane = radius
        if r_plane >= 0:
            if r_plane > 0:
                plane = np.vstack([disk_grid(cx, cy, r_plane, h), _rim(cx, cy, r_plane, h)])
            else:
                plane = np.array([[cx, cy]])
            M, N, D = lattice_in_disk(cx, cy, r_plane)
            for m, n, d in zip(M, N, D):
                if isinstance(center, Spike) and (m, n) == (center.m, center.n):
                    continue
                hs = _heights(0.0, max(r_plane - d, 0.0), h)
                spikes.append(np.column_stack([np.full(len(hs), m), np.full(len(hs), n), hs]))
        sp = np.vstack(spikes) if spikes else np.empty((0, 3))
        return PointNet(plane, sp.astype(float))

    # ---- group action
    def act(self, g: LatticeIsometry, obj):
        if not isinstance(g, LatticeIsometry):
            raise IncompatibleSpaceError(f"{g!r} does not act on the spiked plane")
        if isinstance(obj, Plane):
            return Plane(*g.apply_xy((obj.x, obj.y)))
        if isinstance(obj, Spike):
            m, n = g.apply_xy((obj.m, obj.n))
            return Spike(int(m), int(n), obj.t)
        if isinstance(obj, SpikeEnd):
            m, n = g.apply_xy((obj.m, obj.n))
            return SpikeEnd(int(m), int(n))
        if isinstance(obj, Geodesic):
            return obj.mapped(g.apply_xy, lambda e: self.act(g, e))
        raise IncompatibleSpaceError(f"cannot act on {obj!r}")

    # ---- rays
    def asymptotic_hausdorff(self, alpha: Geodesic, beta: Geodesic, horizon: float,
                             step: float = 0.05) -> float:
        """Hausdorff distance of two asymptotic rays inside B(alpha(0), horizon).

        Each ray's sampled points in the ball are measured against the whole
        other ray (closed form), so truncation does not inflate the value.
        """
        if alpha.kind != "ray" or beta.kind != "ray":
            raise GeometryError("asymptotic_hausdorff expects rays")
        if alpha.end != beta.end:
            raise NotAsymptoticError(f"rays end at {alpha.end} and {beta.end}")
        o = alpha.point_at(alpha.lo)
        a_pts = alpha.sample(step, alpha.lo, alpha.lo + horizon)
        off = self.distance(o, beta.point_at(beta.lo))
        b_pts = [q for q in beta.sample(step, beta.lo, beta.lo + horizon + off)
                 if self.distance(o, q) <= horizon + _TOL]
        h1 = max((beta.distance_to(p) for p in a_pts), default=0.0)
        h2 = max((alpha.distance_to(q) for q in b_pts), default=0.0)
        return max(h1, h2)
