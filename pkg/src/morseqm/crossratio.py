"""Cross-ratios of four boundary points.

Two definitions:

* ``centers``: the distance between the canonical centers of the ideal
  triangles (a, b, c) and (a, c, d). Any pair of K-centers of the two
  triangles is within 2L of this value, L the E_K diameter bound.
* ``paulin``: ½(d(a,d) + d(b,c) - d(a,b) - d(c,d)) evaluated on points
  far out along rays. In the spiked plane all truncation terms cancel and
  the value is the same expression in the Euclidean distances of the feet.

Signs are dropped throughout; values are absolute values. The three
pairings used by the flip selector are, with S1 = |ab|+|cd|,
S2 = |ac|+|bd| and S3 = |ad|+|bc|:

    [a,b,c,d] = ½|S3 - S1|,  [a,c,b,d] = ½|S3 - S2|,  [c,a,b,d] = ½|S1 - S2|.

Replacing b, c or a respectively by d is the corresponding flip.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .centers import IdealTriangle, center_of, e_k_diameter_bound, slim_constant
from .errors import DegenerateTupleError, GeometryError, UnsupportedSpaceError
from .space.spiked import Plane, SpikedPlane, SpikeEnd, euclid
from .space.tree import RegularTree, common_prefix

# pairing label -> (vertex replaced by d, reordering of (a, b, c, d))
PAIRINGS = {
    "abcd": (1, (0, 1, 2, 3)),
    "acbd": (2, (0, 2, 1, 3)),
    "cabd": (0, (2, 0, 1, 3)),
}


@dataclass
class CrossRatioValue:
    value: float
    method: str
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _space_for(points, space):
    if space is not None:
        return space
    if all(isinstance(p, SpikeEnd) for p in points):
        return SpikedPlane()
    raise GeometryError("pass the space explicitly for non-spiked boundary points")


def _check(points):
    if len(set(points)) < len(points):
        raise DegenerateTupleError(f"cross-ratio needs distinct points, got {points}")


def _feet_dist(u: SpikeEnd, v: SpikeEnd) -> float:
    return euclid(u.m - v.m, u.n - v.n)


def paulin_value(a, b, c, d, T: float = 1e3, space=None) -> float:
    """|[a,b,c,d]| by the four-point formula (closed form where available)."""
    pts = (a, b, c, d)
    _check(pts)
    space = _space_for(pts, space)
    if isinstance(space, SpikedPlane):
        # fsum keeps the cancellation exact
        s = math.fsum([_feet_dist(a, d), _feet_dist(b, c), -_feet_dist(a, b), -_feet_dist(c, d)])
        return abs(s) / 2
    if isinstance(space, RegularTree):
        if T <= 0:
            raise GeometryError("truncation T must be positive")

        def g(u, v):
            return min(common_prefix(u, v), T)
        # d(u_T, v_T) = 2T - 2 min((u|v), T); the 2T terms cancel
        return abs(g(a, b) + g(c, d) - g(a, d) - g(b, c))
    raise UnsupportedSpaceError(f"no boundary in {space!r}")


def paulin_truncated(a, b, c, d, T: float = 1e3, basepoint=None) -> float:
    """Spiked-plane Paulin value computed honestly on points at distance T along rays.

    Independent of the closed form: used as its oracle.
    """
    pts = (a, b, c, d)
    _check(pts)
    sp = SpikedPlane()
    x0 = Plane(0.0, 0.0) if basepoint is None else basepoint
    far = [sp.ray_from(x0, p).point_at(T) for p in pts]
    A, B, C, D = far
    return abs(sp.distance(A, D) + sp.distance(B, C) - sp.distance(A, B) - sp.distance(C, D)) / 2


def cross_ratio_paulin(a, b, c, d, T: float = 1e3, space=None) -> CrossRatioValue:
    space = _space_for((a, b, c, d), space)
    meta = {"T": None if isinstance(space, SpikedPlane) else T}
    return CrossRatioValue(paulin_value(a, b, c, d, T, space), "paulin", meta)


def cross_ratio_centers(a, b, c, d, resolution: float = 0.1, space=None,
                        bracket: bool = True, horizon: float = 100.0) -> CrossRatioValue:
    """d(π(a,b,c), π(a,c,d)), with the E_K diameter bound L in ``meta`` if ``bracket``."""
    pts = (a, b, c, d)
    _check(pts)
    space = _space_for(pts, space)
    T1 = IdealTriangle(a, b, c, space=space)
    T2 = IdealTriangle(a, c, d, space=space)
    p = center_of(T1, resolution)
    q = center_of(T2, resolution)
    meta = {"resolution": resolution, "centers": (p, q)}
    if bracket:
        slims = [slim_constant(T, horizon, resolution) for T in (T1, T2)]
        tree = isinstance(space, RegularTree)
        Ks = [s if tree else s + resolution for s in slims]
        L = max(e_k_diameter_bound(T, K, resolution) for T, K in zip((T1, T2), Ks))
        meta.update(slim=max(slims), K=max(Ks), L=L)
    return CrossRatioValue(space.distance(p, q), "centers", meta)


@dataclass
class Comparison:
    difference: float
    bound: float
    centers: float
    paulin: float
    slim: float
    L: float
    resolution: float

    @property
    def ok(self) -> bool:
        return self.difference <= self.bound + 1e-9


def compare_details(a, b, c, d, resolution: float = 0.1, space=None) -> Comparison:
    c_val = cross_ratio_centers(a, b, c, d, resolution, space)
    p_val = cross_ratio_paulin(a, b, c, d, space=space)
    m = c_val.meta
    bound = 4 * m["slim"] + 2 * m["L"] + 2 * resolution
    return Comparison(abs(c_val.value - p_val.value), bound, c_val.value, p_val.value,
                      m["slim"], m["L"], resolution)


def compare_definitions(a, b, c, d, resolution: float = 0.1, space=None) -> float:
    """|centers value - Paulin value|."""
    return compare_details(a, b, c, d, resolution, space).difference


def flip_values(a, b, c, d, method: str = "paulin", space=None, **kw) -> dict:
    """Values of the three pairings [a,b,c,d], [a,c,b,d], [c,a,b,d]."""
    pts = (a, b, c, d)
    _check(pts)
    out = {}
    for label, (_, order) in PAIRINGS.items():
        q = [pts[i] for i in order]
        if method == "paulin":
            out[label] = cross_ratio_paulin(*q, space=space, **kw)
        elif method == "centers":
            out[label] = cross_ratio_centers(*q, space=space, bracket=False, **kw)
        else:
            raise GeometryError(f"unknown method {method!r}")
    return out


def min_flip(a, b, c, d, method: str = "paulin", space=None, **kw):
    """(label, value) of the smallest of the three pairings; ties go to the earlier label."""
    vals = flip_values(a, b, c, d, method, space, **kw)
    label = min(vals, key=lambda k: (vals[k].value, list(PAIRINGS).index(k)))
    return label, vals[label]


def flipped_triangle(triple, d, label):
    """Triangle obtained from ``triple`` by the flip ``label`` with new vertex d."""
    i, _ = PAIRINGS[label]
    t = list(triple)
    t[i] = d
    return tuple(t)
