"""Contracting constants and sampled Morse-gauge values for geodesics.

A geodesic is D-contracting when the nearest-point projection of every
metric ball disjoint from it has diameter at most D. In the spiked plane the
optimal D of the bi-infinite geodesic between two spikes is the planar
distance between their feet; the brute-force oracle here measures it from
resolution nets, never exceeding the true value.

Brute-force oracle (spiked plane, ``method="grid"``):

* ball centers: plane points of the grid anchored at the geodesic's first
  planar corner, spacing ``resolution``, with 0 < d(x, γ) <= window;
* radii: multiples of ``resolution`` below d(x, γ). The projection of
  B(x, r) grows with r, so only the largest such radius is evaluated;
* ball nets: the grid points of the disk plus the lattice feet it contains.
  A spike point projects exactly where its foot does (any path to the
  geodesic leaves the spike through the foot, and a ball disjoint from the
  geodesic never contains a spike of the geodesic), so spike portions add
  nothing beyond their feet;
* centers on spikes are skipped: B(Spike(c, t), r) meets the plane in
  B(c, r - t) and elsewhere only in spikes projecting like their feet, so
  the plane center c with the same clearance dominates it.

The minimum and maximum projection parameter over each disk come from
per-row range queries (sparse tables), which keeps the sweep vectorized.
The ``generic`` method works on any space through ``ball_sample``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePairError, GeometryError, UnsupportedSpaceError
from .space.spiked import Geodesic, Plane, SpikedPlane, SpikeEnd, euclid, snap

_TOL = 1e-9


def space_of(gamma):
    """The space a geodesic lives in."""
    if isinstance(gamma, Geodesic):
        return SpikedPlane()
    for attr in ("tree", "space"):
        if hasattr(gamma, attr):
            return getattr(gamma, attr)
    raise GeometryError(f"cannot infer the space of {gamma!r}")


def contracting_constant_analytic(gamma, space=None) -> float:
    """Planar distance between the spike feet of a bi-infinite spiked-plane geodesic."""
    space = space_of(gamma) if space is None else space
    if not isinstance(space, SpikedPlane):
        raise UnsupportedSpaceError("closed-form contracting constants exist only in the spiked plane")
    if not isinstance(gamma, Geodesic) or gamma.kind != "bi-infinite":
        raise GeometryError("analytic contracting constant needs a bi-infinite geodesic")
    a, b = gamma.start, gamma.end
    return euclid(a.m - b.m, a.n - b.n)


def pair_constant(a: SpikeEnd, b: SpikeEnd) -> float:
    """Analytic contracting constant of the geodesic joining two spikes."""
    if a == b:
        raise DegeneratePairError(f"{a} repeated")
    return euclid(a.m - b.m, a.n - b.n)


@dataclass
class BruteForceResult:
    value: float
    window: float
    resolution: float
    witness_center: object = None
    witness_radius: float = 0.0
    centers: int = 0
    method: str = "grid"


@dataclass
class GaugeEstimate:
    analytic_D: float | None
    bruteforce_D: float
    window: float
    ball_resolution: float
    morse_samples: list = field(default_factory=list)


def contracting_constant_bruteforce(gamma, space=None, window: float = 10.0,
                                    resolution: float = 0.1, method: str = "auto") -> float:
    return bruteforce_details(gamma, space, window, resolution, method).value


def bruteforce_details(gamma, space=None, window=10.0, resolution=0.1, method="auto") -> BruteForceResult:
    space = space_of(gamma) if space is None else space
    if window <= 0 or resolution <= 0:
        raise GeometryError("window and resolution must be positive")
    if gamma.length <= 0:
        raise DegeneratePairError("geodesic has length 0")
    if method == "auto":
        method = "grid" if isinstance(space, SpikedPlane) else "generic"
    if method == "grid":
        if not isinstance(space, SpikedPlane):
            raise UnsupportedSpaceError("grid oracle is specific to the spiked plane")
        return _grid_oracle(gamma, window, resolution)
    if method == "generic":
        return _generic_oracle(gamma, space, window, resolution)
    raise GeometryError(f"unknown method {method!r}")


# --------------------------------------------------------------------------
# grid oracle
# --------------------------------------------------------------------------


class _RangeTable:
    """Row-wise sparse tables answering min/max over column intervals."""

    def __init__(self, A: np.ndarray, max_width: int):
        self.mins = [A]
        self.maxs = [A]
        w = 1
        while 2 * w <= max_width:
            lo, hi = self.mins[-1], self.maxs[-1]
            self.mins.append(np.minimum(lo[:, :-w], lo[:, w:]))
            self.maxs.append(np.maximum(hi[:, :-w], hi[:, w:]))
            w *= 2

    def query(self, rows, j0, j1):
        length = j1 - j0 + 1
        k = np.floor(np.log2(length)).astype(int)
        k = np.minimum(k, len(self.mins) - 1)
        mn = np.empty(len(rows))
        mx = np.empty(len(rows))
        for lev in np.unique(k):
            sel = k == lev
            r, a = rows[sel], j0[sel]
            b = j1[sel] - (1 << lev) + 1
            mn[sel] = np.minimum(self.mins[lev][r, a], self.mins[lev][r, b])
            mx[sel] = np.maximum(self.maxs[lev][r, a], self.maxs[lev][r, b])
        return mn, mx


def _grid_oracle(gamma: Geodesic, window: float, h: float) -> BruteForceResult:
    corners = gamma.planar_points()
    ax, ay = corners[0]
    reach = 2 * window
    lo = corners.min(axis=0) - reach
    hi = corners.max(axis=0) + reach
    i0 = int(math.floor((lo[0] - ax) / h)) - 1
    i1 = int(math.ceil((hi[0] - ax) / h)) + 1
    j0 = int(math.floor((lo[1] - ay) / h)) - 1
    j1 = int(math.ceil((hi[1] - ay) / h)) + 1
    xs = ax + snap(np.arange(i0, i1 + 1) * h)
    ys = ay + snap(np.arange(j0, j1 + 1) * h)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    dist, S = gamma.plane_dist(P)
    dist = dist.reshape(X.shape)
    S = S.reshape(X.shape)

    cand = (dist > 0) & (dist <= window + _TOL)
    ci, cj = np.nonzero(cand)
    if len(ci) == 0:
        return BruteForceResult(0.0, window, h)
    k = np.ceil(dist[ci, cj] / h - _TOL).astype(int) - 1
    k = np.maximum(k, 0)
    kmax = int(k.max())
    smin = S[ci, cj].copy()
    smax = smin.copy()
    table = _RangeTable(S, 2 * kmax + 1)
    ncol = S.shape[1]
    for di in range(-kmax, kmax + 1):
        sel = np.nonzero(k >= abs(di))[0]
        if len(sel) == 0:
            continue
        kk = k[sel]
        w = np.floor(np.sqrt(kk * kk - di * di + 0.0) + 1e-12).astype(int)
        # exact integer correction of the half-width
        w = np.where((w + 1) ** 2 + di * di <= kk * kk, w + 1, w)
        w = np.where(w * w + di * di > kk * kk, w - 1, w)
        rows = ci[sel] + di
        a = np.maximum(cj[sel] - w, 0)
        b = np.minimum(cj[sel] + w, ncol - 1)
        mn, mx = table.query(rows, a, b)
        smin[sel] = np.minimum(smin[sel], mn)
        smax[sel] = np.maximum(smax[sel], mx)

    if abs(1.0 / h - round(1.0 / h)) > 1e-9:
        _merge_feet(gamma, X, Y, ci, cj, k * h, smin, smax)
    diam = smax - smin
    best = int(np.argmax(diam))
    return BruteForceResult(float(diam[best]), window, h,
                            Plane(float(X[ci[best], cj[best]]), float(Y[ci[best], cj[best]])),
                            float(k[best] * h), len(ci), "grid")


def _merge_feet(gamma, X, Y, ci, cj, radii, smin, smax):
    """Lattice feet that are not grid points (resolution not dividing 1)."""
    cx, cy = X[ci, cj], Y[ci, cj]
    for m in range(int(math.floor(X.min())), int(math.ceil(X.max())) + 1):
        for n in range(int(math.floor(Y.min())), int(math.ceil(Y.max())) + 1):
            inside = euclid_sq(cx - m, cy - n) <= radii ** 2 + _TOL
            if not inside.any():
                continue
            _, s = gamma.plane_dist(np.array([[float(m), float(n)]]))
            smin[inside] = np.minimum(smin[inside], s[0])
            smax[inside] = np.maximum(smax[inside], s[0])


def euclid_sq(dx, dy):
    return dx * dx + dy * dy


# --------------------------------------------------------------------------
# generic oracle
# --------------------------------------------------------------------------


def _finite_range(gamma, pad):
    """Parameter window of γ: infinite sides are cut ``pad`` beyond the core."""
    lo, hi = gamma.lo, gamma.hi
    if math.isinf(lo):
        lo = -pad
    if math.isinf(hi):
        core = gamma.pieces[-1].lo if isinstance(gamma, Geodesic) else 0.0
        hi = max(core, 0.0) + pad
    return lo, hi


def _param_range(gamma, p):
    if hasattr(gamma, "nearest_range"):
        _, a, b = gamma.nearest_range(p)
        return a, b
    d, s = gamma.nearest(p)
    return s, s


def _generic_oracle(gamma, space, window, h, centers=None) -> BruteForceResult:
    if centers is None:
        lo, hi = _finite_range(gamma, window)
        seen = set()
        centers = []
        for s in gamma.params(max(window / 2, h), lo, hi):
            for x in space.ball_sample(gamma.point_at(float(s)), window, h):
                if x not in seen:
                    seen.add(x)
                    centers.append(x)
    best = BruteForceResult(0.0, window, h, method="generic")
    count = 0
    for x in centers:
        d = gamma.distance_to(x)
        if not (0 < d <= window + _TOL):
            continue
        count += 1
        k = max(int(math.ceil(d / h - _TOL)) - 1, 0)
        r = k * h
        smin, smax = math.inf, -math.inf
        for y in space.ball_sample(x, r, h):
            a, b = _param_range(gamma, y)
            smin, smax = min(smin, a), max(smax, b)
        if smax - smin > best.value:
            best = BruteForceResult(smax - smin, window, h, x, r, 0, "generic")
    best.centers = count
    return best


def generic_bruteforce(gamma, space, window, resolution, centers=None) -> BruteForceResult:
    """Ball-sample based oracle, optionally restricted to given ball centers."""
    return _generic_oracle(gamma, space, window, resolution, centers)


# --------------------------------------------------------------------------
# Morse gauge sampling
# --------------------------------------------------------------------------


@dataclass
class _Candidate:
    deviation: float
    d: np.ndarray      # pairwise distances (upper triangle, flattened)
    dsig: np.ndarray   # arc-length separations
    rho: float

    def valid(self, lam: float, eps: float) -> bool:
        if len(self.d) == 0:
            return True
        c = lam ** self.rho
        return bool(np.all(self.d >= self.dsig / (c * lam) - eps - _TOL))


def _path_points(space, pieces, step):
    """Sample a concatenation of unit-speed geodesics at spacing <= step."""
    pts, sig = [], []
    s0 = 0.0
    for g, a, b in pieces:
        if b - a <= 0:
            continue
        n = max(int(math.ceil((b - a) / step)), 1)
        for i, s in enumerate(np.linspace(a, b, n + 1)):
            if pts and i == 0:
                continue
            pts.append(g.point_at(float(s)))
            sig.append(s0 + (s - a))
        s0 += b - a
    return pts, np.array(sig)


class MorsePool:
    """Randomized quasi-geodesic candidates with endpoints on γ.

    Each candidate is: γ from s1 to u, a geodesic out to a detour point P,
    a geodesic back to γ(v), then γ from v to s2. Re-timing by the factor
    ``λ**ρ`` turns the arc-length path into a (λ, ε)-quasi-geodesic whenever
    d(p_i, p_j) >= Δσ / λ**(1+ρ) - ε on all sampled pairs. The pool is
    generated once from the seed, so validity (and hence the sampled
    deviation) is monotone in λ and in ε.
    """

    def __init__(self, gamma, space=None, trials=100, window=5.0, seed=0, step=None):
        if trials < 1:
            raise GeometryError("trials must be >= 1")
        if window <= 0:
            raise GeometryError("window must be positive")
        self.gamma = gamma
        self.space = space_of(gamma) if space is None else space
        self.window = window
        step = window / 20 if step is None else step
        rng = np.random.default_rng(seed)
        lo, hi = _finite_range(gamma, window)
        self.candidates = [_Candidate(0.0, np.empty(0), np.empty(0), 0.0)]
        for _ in range(trials):
            s1, u, v, s2 = np.sort(rng.uniform(lo, hi, 4))
            w = rng.uniform(u, v) if v > u else u
            P = self._detour_point(rng, float(w))
            A, B = gamma.point_at(float(u)), gamma.point_at(float(v))
            pieces = [(gamma, float(s1), float(u))]
            g1 = self.space.geodesic(A, P)
            g2 = self.space.geodesic(P, B)
            pieces += [(g1, g1.lo, g1.hi), (g2, g2.lo, g2.hi), (gamma, float(v), float(s2))]
            pts, sig = _path_points(self.space, pieces, step)
            if len(pts) < 2:
                continue
            D = self.space.pairwise(pts)
            iu = np.triu_indices(len(pts), 1)
            dsig = (sig[:, None] - sig[None, :])[iu[1], iu[0]]
            dev = max(gamma.distance_to(p) for p in pts)
            self.candidates.append(_Candidate(dev, D[iu], np.abs(dsig), float(rng.uniform(0, 1))))

    def _detour_point(self, rng, w):
        base = self.gamma.point_at(w)
        r = float(rng.uniform(0, self.window))
        net = self.space.ball_sample(base, r, max(r / 4, self.window / 20))
        pts = list(net)
        return pts[int(rng.integers(len(pts)))]

    def max_deviation(self, lam: float, eps: float) -> float:
        if lam < 1 or eps < 0:
            raise GeometryError("need lambda >= 1 and epsilon >= 0")
        return max(c.deviation for c in self.candidates if c.valid(lam, eps))


def morse_deviation_sample(gamma, lam: float, eps: float, trials: int, window: float,
                           space=None, seed: int = 0, step=None) -> float:
    """Empirical lower bound for the Morse gauge N(λ, ε) of γ."""
    if lam < 1 or eps < 0:
        raise GeometryError("need lambda >= 1 and epsilon >= 0")
    return MorsePool(gamma, space, trials, window, seed, step).max_deviation(lam, eps)


def gauge_estimate(gamma, space=None, window=10.0, resolution=0.1, lams=(1.0, 2.0, 4.0),
                   epss=(0.0, 1.0), trials=100, seed=0, morse_window=None) -> GaugeEstimate:
    space = space_of(gamma) if space is None else space
    try:
        analytic = contracting_constant_analytic(gamma, space)
    except GeometryError:
        analytic = None
    bf = contracting_constant_bruteforce(gamma, space, window, resolution)
    pool = MorsePool(gamma, space, trials, morse_window or window, seed)
    samples = [(lam, eps, pool.max_deviation(lam, eps)) for eps in epss for lam in lams]
    return GaugeEstimate(analytic, bf, window, resolution, samples)
