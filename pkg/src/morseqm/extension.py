"""Extending a boundary bijection f to an interior map h.

For x in the spiked plane, Π(x) is the set of canonical centers of the
image triangles f(a, b, c) over all admissible triples (a, b, c) whose own
center lies in B(x, R). h(x) is the image center of the lexicographically
least admissible triple; the spread of Π(x) is recorded as its diameter.

Admissible triples: three spikes with pairwise contracting constant at most
``D_cap``. Up to integer translation there are finitely many of them
(``shapes``), each with a cached center, so the candidates at x are
enumerated exactly as shape + lattice translate with center inside B(x, R).
A candidate's feet all lie within R + D_cap of x, which is the required
lower bound on ``triple_search_radius``.

The spiked plane is not cocompact: centers never sit high on a spike, so
Π(Spike(c, t)) is empty once t > R. Such points are extended along the
cone over the foot: h(Spike(c, t)) is the point at distance t on the ray
from h(Plane(c)) to f(r_c).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .boundarymap import BoundaryMap
from .centers import _minmax_center, center_of, triangle
from .contracting import pair_constant
from .crossratio import flipped_triangle, min_flip
from .errors import ConfigError, EmptyCandidateError, GeometryError, InsufficientSamplesError
from .space.spiked import Plane, Spike, SpikedPlane, SpikeEnd, euclid, euclid_arr, snap

_SP = SpikedPlane()
_TOL = 1e-12


@dataclass(frozen=True)
class ExtensionConfig:
    R: float = 1.0
    triple_search_radius: float | None = None
    D_cap: float = 1.5
    resolution: float = 0.1
    sanity_bound: float | None = None

    def __post_init__(self):
        if not self.R > 0:
            raise ConfigError("R must be positive")
        if not self.D_cap > 0:
            raise ConfigError("D_cap must be positive")
        if not self.resolution > 0:
            raise ConfigError("resolution must be positive")
        if self.triple_search_radius is None:
            object.__setattr__(self, "triple_search_radius", self.R + self.D_cap)
        if self.triple_search_radius < self.R + self.D_cap - 1e-12:
            raise ConfigError("triple_search_radius must be at least R + D_cap "
                              "(a candidate center within R of x has every foot within R + D_cap)")
        if self.sanity_bound is None:
            object.__setattr__(self, "sanity_bound", 10.0 * self.R)


# --------------------------------------------------------------------------
# candidate triples
# --------------------------------------------------------------------------


@lru_cache(maxsize=256)
def shapes(D_cap: float, resolution: float):
    """Admissible triples with least foot at the origin, with their centers.

    Returns a tuple of (feet, (cx, cy)) with feet sorted; the origin is the
    lexicographically least foot, so the other two are lexicographically
    positive lattice points within D_cap.
    """
    r = int(math.floor(D_cap + 1e-9))
    pts = [(m, n) for m in range(0, r + 1) for n in range(-r, r + 1)
           if (m, n) > (0, 0) and euclid(m, n) <= D_cap + 1e-12]
    out = []
    for i, p in enumerate(pts):
        for q in pts[i + 1:]:
            if euclid(p[0] - q[0], p[1] - q[1]) <= D_cap + 1e-12:
                feet = tuple(sorted(((0, 0), p, q)))
                x, y, _ = _minmax_center(feet, float(resolution))
                out.append((feet, (x, y)))
    return tuple(sorted(out))


def covering_radius(cfg: ExtensionConfig, samples: int = 101) -> float:
    """R₀: the least R for which every point has a candidate (sampled over the unit cell)."""
    u = np.linspace(0.0, 1.0, samples)
    X, Y = np.meshgrid(u, u, indexing="ij")
    P = np.column_stack([X.ravel(), Y.ravel()])
    best = np.full(len(P), np.inf)
    for _, (cx, cy) in shapes(cfg.D_cap, cfg.resolution):
        for a in range(-2, 3):
            for b in range(-2, 3):
                best = np.minimum(best, euclid_arr(P[:, 0] - (cx + a), P[:, 1] - (cy + b)))
    return float(best.max())


def _anchor(x):
    """Split x into an integer cell and an exact offset (equivariant under Z^2)."""
    fx, fy = x.foot
    bx, by = math.floor(fx), math.floor(fy)
    return (bx, by), (fx - bx, fy - by), x.height


def candidate_triples(x, cfg: ExtensionConfig):
    """Admissible triples whose center lies in B(x, R), lexicographically sorted.

    Each entry is (triple of SpikeEnd in sorted foot order, center).
    """
    _SP.check_point(x)
    (bx, by), (ux, uy), t = _anchor(x)
    if t > cfg.R:
        return []
    r_plane = cfg.R - t
    out = []
    reach = int(math.ceil(cfg.R + cfg.D_cap)) + 1
    for feet, (cx, cy) in shapes(cfg.D_cap, cfg.resolution):
        for a in range(-reach, reach + 1):
            for b in range(-reach, reach + 1):
                # center (a + cx, b + cy) relative to the cell of x
                dx, dy = a + cx - ux, b + cy - uy
                if euclid(dx, dy) <= r_plane + _TOL:
                    tri = tuple(SpikeEnd(bx + a + m, by + b + n) for m, n in feet)
                    out.append((tri, Plane(bx + a + cx, by + b + cy)))
    out = [c for c in out if _feet_within(c[0], x, cfg.triple_search_radius)]
    out.sort(key=lambda c: tuple(e.foot for e in c[0]))
    return out


def _feet_within(tri, x, radius):
    fx, fy = x.foot
    return all(euclid(e.m - fx, e.n - fy) <= radius + 1e-9 for e in tri)


def nearest_candidate_distance(x, cfg: ExtensionConfig) -> float:
    (bx, by), (ux, uy), t = _anchor(x)
    best = math.inf
    for _, (cx, cy) in shapes(cfg.D_cap, cfg.resolution):
        for a in range(-2, 3):
            for b in range(-2, 3):
                best = min(best, t + euclid(a + cx - ux, b + cy - uy))
    return best


# --------------------------------------------------------------------------
# the extension
# --------------------------------------------------------------------------


@dataclass
class ExtensionPoint:
    x: object
    h: object
    triple: tuple | None
    pi_diameter: float
    image_D: float
    candidates: int
    method: str = "center"          # or "cone"
    warnings: list = field(default_factory=list)


def _image_center(f: BoundaryMap, tri, resolution):
    img = tuple(f(e) for e in tri)
    if len(set(img)) < 3:
        raise GeometryError(f"{f.name} is not injective on {tri}")
    return center_of(triangle(*(e.foot for e in img)), resolution), img


def extend_details(f: BoundaryMap, x, cfg: ExtensionConfig) -> ExtensionPoint:
    cands = candidate_triples(x, cfg)
    if not cands:
        if x.__class__ is Spike and x.t > 0:
            base = extend_details(f, Plane(float(x.m), float(x.n)), cfg)
            ray = _SP.ray_from(base.h, f(SpikeEnd(x.m, x.n)))
            return ExtensionPoint(x, ray.point_at(x.t), None, base.pi_diameter, base.image_D,
                                  0, "cone", list(base.warnings))
        raise EmptyCandidateError(
            f"no admissible triple has its center within R={cfg.R} of {x}",
            nearest=nearest_candidate_distance(x, cfg))
    images = []
    img_D = 0.0
    for tri, _ in cands:
        c, img = _image_center(f, tri, cfg.resolution)
        images.append(c)
        img_D = max(img_D, max(pair_constant(p, q) for i, p in enumerate(img) for q in img[i + 1:]))
    diam = float(_SP.pairwise(images).max()) if len(images) > 1 else 0.0
    warnings = []
    if diam > cfg.sanity_bound:
        warnings.append(f"unbounded-image: Π diameter {diam:.6g} exceeds sanity bound {cfg.sanity_bound:.6g}")
    return ExtensionPoint(x, images[0], cands[0][0], diam, img_D, len(cands), "center", warnings)


def extend(f: BoundaryMap, x, cfg: ExtensionConfig):
    """h(x): image center of the canonical candidate triple."""
    return extend_details(f, x, cfg).h


class Extension:
    """h = extend(f, ·) as a callable with memoized values."""

    def __init__(self, f: BoundaryMap, cfg: ExtensionConfig):
        self.f = f
        self.cfg = cfg
        self._cache: dict = {}

    def details(self, x) -> ExtensionPoint:
        if x not in self._cache:
            self._cache[x] = extend_details(self.f, x, self.cfg)
        return self._cache[x]

    def __call__(self, x):
        return self.details(x).h


# --------------------------------------------------------------------------
# flip chains
# --------------------------------------------------------------------------


@dataclass
class FlipChain:
    triples: list
    displacements: list
    flip_values: list
    warnings: list = field(default_factory=list)

    def __len__(self):
        return len(self.triples)


def _share_edge(s, t) -> bool:
    return len(set(s) & set(t)) >= 2


def _flip(tri, d, c1, warnings):
    label, val = min_flip(*tri, d)
    if c1 is not None and val.value > c1:
        warnings.append(f"flip {label} of {tri} by {d} has cross-ratio {val.value:.6g} > C1={c1:.6g}")
    return flipped_triangle(tri, d, label), val.value


def flip_chain(T1, T2, c1: float | None = None, resolution: float = 0.1) -> FlipChain:
    """At most five triangles from T1 to T2, consecutive ones sharing an edge.

    Flip T1 to take in a vertex v of T2; flip again to take in a second
    vertex w. If v was replaced in that second flip, flip T2 to take in a
    vertex a of T1 that survived both flips: the result shares an edge
    with one of the two intermediate triangles.
    """
    T1, T2 = tuple(T1), tuple(T2)
    chain, vals, warnings = [T1], [], []
    if set(T1) != set(T2):
        if _share_edge(T1, T2):
            chain.append(T2)
        else:
            v = next(p for p in T2 if p not in T1)
            S2, val = _flip(T1, v, c1, warnings)
            chain.append(S2)
            vals.append(val)
            if set(S2) == set(T2):
                pass
            elif _share_edge(S2, T2):
                chain.append(T2)
            else:
                w = next(p for p in T2 if p not in S2)
                S3, val = _flip(S2, w, c1, warnings)
                vals.append(val)
                if set(S3) == set(T2):
                    chain.append(S3)
                elif _share_edge(S3, T2):
                    chain += [S3, T2]
                else:
                    a = next(p for p in S2 if p in S3 and p not in T2)
                    S4, val = _flip(T2, a, c1, warnings)
                    vals.append(val)
                    if _share_edge(S4, S2):
                        chain += [S4, T2]
                    else:
                        if not _share_edge(S4, S3):
                            warnings.append(f"{S4} shares no edge with {S2} or {S3}")
                        chain += [S3, S4, T2]
    centers = [center_of(triangle(*(e.foot for e in t)), resolution) for t in chain]
    disp = [_SP.distance(p, q) for p, q in zip(centers, centers[1:])]
    return FlipChain(chain, disp, vals, warnings)


# --------------------------------------------------------------------------
# quasi-isometry statistics
# --------------------------------------------------------------------------


@dataclass
class QIFit:
    lam: float
    eps: float
    far: float
    pairs: int

    def __iter__(self):
        return iter((self.lam, self.eps))


def fit_qi_constants(h, pair_count: int | None = None, far: float | None = None,
                     seed: int = 0, space=None) -> QIFit:
    """(λ, ε) with (1/λ) d(x,y) - ε <= d(h(x),h(y)) <= λ d(x,y) + ε on the sampled pairs.

    ``h`` is a sampled map: a dict x -> h(x) or a sequence of (x, h(x)).
    λ is the least multiplicative constant needed on far pairs
    (d(x, y) >= ``far``, default half the sample diameter); ε is the least
    additive constant needed at λ = 1 on the remaining near pairs. Since
    λ >= 1 the pair (λ, ε) is valid on every pair, and with ``far`` fixed
    both values can only grow as pairs are added. ``pair_count`` draws that
    many pairs at random (seeded) instead of using all of them.
    """
    items = list(h.items()) if isinstance(h, dict) else list(h)
    xs = [x for x, _ in items]
    hs = [y for _, y in items]
    space = _SP if space is None else space
    if len(xs) < 2:
        raise InsufficientSamplesError("need at least two sampled points")
    DX = space.pairwise(xs)
    DY = space.pairwise(hs)
    iu = np.triu_indices(len(xs), 1)
    dx, dy = DX[iu], DY[iu]
    if pair_count is not None and pair_count < len(dx):
        if pair_count < 1:
            raise InsufficientSamplesError("pair_count must be >= 1")
        idx = np.random.default_rng(seed).permutation(len(dx))[:pair_count]
        dx, dy = dx[idx], dy[idx]
    if far is None:
        far = float(DX.max()) / 2
    big = dx >= far
    lam = 1.0
    if big.any():
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.maximum(dy[big] / dx[big], np.where(dy[big] > 0, dx[big] / dy[big], np.inf))
        lam = max(1.0, float(ratio.max()))
    near = ~big
    eps = float(np.abs(dy[near] - dx[near]).max()) if near.any() else 0.0
    return QIFit(lam, eps, far, int(len(dx)))


def random_plane_points(count: int, half: float = 20.0, seed: int = 0):
    """Seeded plane points in [-half, half]^2, snapped to the dyadic grid."""
    rng = np.random.default_rng(seed)
    return [Plane(snap(u), snap(v)) for u, v in rng.uniform(-half, half, (count, 2))]


def quasi_inverse_defect(h, h_inv, samples, seed: int = 0) -> float:
    """max over sampled x of d(x, h_inv(h(x))); ``samples`` is a point list or a count."""
    pts = random_plane_points(samples, seed=seed) if isinstance(samples, int) else list(samples)
    if not pts:
        raise InsufficientSamplesError("quasi-inverse defect needs at least one sample point")
    return max(_SP.distance(x, h_inv(h(x))) for x in pts)


def log_heights(top: float, count: int = 12):
    return [0.0] + list(np.geomspace(0.5, top, count)) if top > 0.5 else [0.0, top]


def boundary_agreement(h, f: BoundaryMap, ray_count: int | list, horizon: float,
                       basepoint=None, window: int = 10, step: float = 0.25) -> float:
    """max over tested p of sup_{t <= horizon} d(h(α_p(t)), β_{f(p)}).

    α_p is the ray from the basepoint to p, β the ray from h(basepoint) to
    f(p). The planar part of α is sampled every ``step``; the spike part at
    log-spaced heights up to the horizon.
    """
    return agreement_details(h, f, ray_count, horizon, basepoint, window, step)[0]


def agreement_details(h, f, ray_count, horizon, basepoint=None, window=10, step=0.25):
    if basepoint is None:
        feet, (cx, cy) = shapes(1.5, 0.1)[0]
        basepoint = Plane(cx, cy)
    if isinstance(ray_count, int):
        ends = sorted(_SP.boundary_points(window), key=lambda e: (euclid(*e.foot), e.foot))[:ray_count]
    else:
        ends = list(ray_count)
    if not ends:
        raise InsufficientSamplesError("no boundary points to test")
    hx0 = h(basepoint)
    worst, per = 0.0, []
    for p in ends:
        alpha = _SP.ray_from(basepoint, p)
        beta = _SP.ray_from(hx0, f(p))
        core = alpha.pieces[-1].lo
        ts = list(np.arange(0.0, min(core, horizon), step)) + [min(core, horizon)]
        if horizon > core:
            ts += [core + s for s in log_heights(horizon - core)[1:]]
        dev = max(beta.distance_to(h(alpha.point_at(float(t)))) for t in ts)
        per.append((p, dev))
        worst = max(worst, dev)
    return worst, per


# --------------------------------------------------------------------------
# runs
# --------------------------------------------------------------------------


@dataclass
class ExtensionResult:
    h: dict
    lam: float
    eps: float
    quasi_inverse_defect: float | None
    boundary_agreement: float | None
    pi_diameter_max: float
    warnings: list = field(default_factory=list)
    points: list = field(default_factory=list)
    displacement: float | None = None
    certificate: dict | None = None

    @property
    def failed(self) -> bool:
        return self.certificate is not None


def _extend_one(args):
    return extend_details(*args)


def window_points(half: float = 20.0, step: float = 2.0, offset=(0.25, 0.5), spikes=()):
    """Plane sample grid over [-half, half]^2 (shifted off the lattice) plus given spike points."""
    k = int(round(2 * half / step))
    pts = [Plane(-half + i * step + offset[0], -half + j * step + offset[1])
           for i in range(k) for j in range(k)]
    return pts + list(spikes)


def run_extension(f: BoundaryMap, cfg: ExtensionConfig, points, isometry=None,
                  ray_count: int = 12, horizon: float = 1e3, pair_count: int | None = None,
                  far: float | None = None, workers: int = 1) -> ExtensionResult:
    """Extend f over the sample points and gather every statistic.

    ``isometry`` (a LatticeIsometry) enables the distance-to-isometry
    statistic. A failure certificate is attached when some Π diameter
    exceeds the sanity bound or the boundary agreement exceeds
    2(R + Π_diameter_max).
    """
    h = Extension(f, cfg)
    h_inv = Extension(f.inverted(), cfg)
    points = list(points)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            details = list(pool.map(_extend_one, [(f, x, cfg) for x in points], chunksize=16))
        h._cache.update({d.x: d for d in details})
    else:
        details = [h.details(x) for x in points]
    pi_max = max(d.pi_diameter for d in details)
    fit = fit_qi_constants([(d.x, d.h) for d in details], pair_count, far)
    qid = quasi_inverse_defect(h, h_inv, points)
    agree, per_ray = agreement_details(h, f, ray_count, horizon)
    warnings = [w for d in details for w in d.warnings]
    disp = None
    if isometry is not None:
        disp = max(_SP.distance(d.h, _SP.act(isometry, d.x)) for d in details)
    bound = 2 * (cfg.R + pi_max)
    cert = None
    over = [d for d in details if d.pi_diameter > cfg.sanity_bound]
    if over or agree > bound:
        cert = {
            "reason": "unbounded-image" if over else "boundary-disagreement",
            "sanity_bound": cfg.sanity_bound,
            "pi_witnesses": [(str(d.x), d.pi_diameter) for d in over[:10]],
            "agreement": agree,
            "agreement_bound": bound,
        }
    return ExtensionResult({d.x: d.h for d in details}, fit.lam, fit.eps, qid, agree, pi_max,
                           warnings, details, disp, cert)


def swap_certificate(cfg: ExtensionConfig, ns=(5, 10, 20), horizon: float = 1e3) -> dict:
    """Failure evidence for the swap map along Plane(n, 0.5) and rays to r_{n,0}."""
    from .boundarymap import swap_map

    f = swap_map()
    h = Extension(f, cfg)
    rows = []
    for n in ns:
        d = h.details(Plane(float(n), 0.5))
        agree = boundary_agreement(h, f, [SpikeEnd(n, 0)], horizon)
        rows.append({"n": n, "pi_diameter": d.pi_diameter, "agreement": agree})
    unbounded = any(r["pi_diameter"] > cfg.sanity_bound for r in rows)
    pis = [r["pi_diameter"] for r in rows]
    growing = all(b > a for a, b in zip(pis, pis[1:]))
    return {"rows": rows, "unbounded_image": unbounded, "pi_growing": growing,
            "sanity_bound": cfg.sanity_bound, "failed": unbounded or growing}
