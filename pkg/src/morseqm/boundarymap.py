"""Boundary bijections and their stability / quasi-mobius profiles.

The spiked-plane boundary is discrete, so a boundary homeomorphism is
just a bijection of spike indices. Maps carry an explicit inverse; rules
are small picklable callables so profiles can fan out to worker pools.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .contracting import pair_constant
from .crossratio import paulin_value
from .errors import ConfigError, GeometryError, InsufficientSamplesError
from .space.config import parse_kv
from .space.spiked import LatticeIsometry, SpikedPlane, SpikeEnd

_ZERO = 1e-12


# --------------------------------------------------------------------------
# rules
# --------------------------------------------------------------------------


class Identity:
    def __call__(self, a):
        return a

    def __repr__(self):
        return "identity"


class SwapRule:
    """Exchange r_{n,0} and r_{-n,0}; fix everything else."""

    def __call__(self, a: SpikeEnd):
        if a.n == 0 and a.m != 0:
            return SpikeEnd(-a.m, 0)
        return a

    def __repr__(self):
        return "swap"


@dataclass(frozen=True)
class LatticeRule:
    g: LatticeIsometry

    def __call__(self, a: SpikeEnd):
        return SpikedPlane().act(self.g, a)


@dataclass(frozen=True)
class TableRule:
    """Identity except on a finite table of feet."""

    table: tuple  # ((m, n), (m', n')) pairs

    def __call__(self, a: SpikeEnd):
        hit = dict(self.table).get(a.foot)
        return a if hit is None else SpikeEnd(*hit)


@dataclass(frozen=True)
class TreeRule:
    tree: object
    g: tuple

    def __call__(self, a):
        return self.tree.act(self.g, a)


@dataclass
class BoundaryMap:
    forward: Callable
    inverse: Callable
    name: str = "map"

    def __call__(self, a):
        return self.forward(a)

    def inverted(self) -> "BoundaryMap":
        return BoundaryMap(self.inverse, self.forward, f"{self.name}^-1")

    def check_bijection(self, points: Iterable) -> bool:
        """Round-trip check on the given boundary points; raises on failure."""
        for a in points:
            if self.inverse(self.forward(a)) != a or self.forward(self.inverse(a)) != a:
                raise GeometryError(f"{self.name} is not a bijection at {a}")
        return True


def identity_map() -> BoundaryMap:
    return BoundaryMap(Identity(), Identity(), "identity")


def swap_map() -> BoundaryMap:
    return BoundaryMap(SwapRule(), SwapRule(), "swap")


def induced_map(g, tree=None) -> BoundaryMap:
    """Boundary action of a lattice isometry (or, with ``tree``, a reduced word)."""
    if tree is not None:
        g = tuple(g)
        if tree.reduce(g) != g:
            raise GeometryError(f"{g} is not a reduced word")
        return BoundaryMap(TreeRule(tree, g), TreeRule(tree, tree.inverse_word(g)), f"word{g}")
    if not isinstance(g, LatticeIsometry):
        try:
            a, b = g
        except (TypeError, ValueError):
            raise GeometryError(f"{g!r} is not a lattice isometry") from None
        if int(a) != a or int(b) != b:
            raise GeometryError(f"translation {g!r} does not preserve the lattice")
        g = LatticeIsometry.translation(int(a), int(b))
    name = "identity" if g.is_identity else f"lattice{g.linear}+{tuple(g.shift)}"
    return BoundaryMap(LatticeRule(g), LatticeRule(g.inverse()), name)


def table_map(pairs) -> BoundaryMap:
    pairs = tuple((tuple(map(int, u)), tuple(map(int, v))) for u, v in pairs)
    dom = [u for u, _ in pairs]
    img = [v for _, v in pairs]
    if len(set(dom)) != len(dom) or set(dom) != set(img):
        raise ConfigError("exception table must permute its own set of feet")
    inv = tuple((v, u) for u, v in pairs)
    return BoundaryMap(TableRule(pairs), TableRule(inv), "table")


def _ints(text, key):
    try:
        return [int(t) for t in text.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: expected integers, got {text!r}") from None


def map_from_dict(cfg: dict) -> BoundaryMap:
    """Boundary map from parsed key-value config.

    ``map = identity | swap | table | affine``; a table lists
    ``m n m' n'`` quadruples separated by ``;``; an affine rule gives
    ``linear = a b c d`` and ``shift = s t``.
    """
    kind = cfg.get("map", "identity")
    if kind == "identity":
        return identity_map()
    if kind == "swap":
        return swap_map()
    if kind == "table":
        pairs = []
        for chunk in cfg.get("table", "").split(";"):
            if not chunk.strip():
                continue
            v = _ints(chunk, "table")
            if len(v) != 4:
                raise ConfigError(f"table entry {chunk!r} needs four integers")
            pairs.append(((v[0], v[1]), (v[2], v[3])))
        return table_map(pairs)
    if kind in ("affine", "translation"):
        lin = tuple(_ints(cfg.get("linear", "1 0 0 1"), "linear"))
        shift = tuple(_ints(cfg.get("shift", "0 0"), "shift"))
        if len(lin) != 4 or len(shift) != 2:
            raise ConfigError("affine map needs 'linear = a b c d' and 'shift = s t'")
        try:
            return induced_map(LatticeIsometry(lin, shift))
        except GeometryError as exc:
            raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown map kind {kind!r}")


def load_map(spec: str) -> BoundaryMap:
    """A built-in name (identity, swap, translation:a,b, axis-swap) or a config path."""
    if spec in ("identity", "swap"):
        return map_from_dict({"map": spec})
    if spec == "axis-swap":
        return induced_map(LatticeIsometry.axis_swap())
    if spec.startswith("translation:"):
        a, b = _ints(spec.split(":", 1)[1], "translation")
        return induced_map((a, b))
    from pathlib import Path

    p = Path(spec)
    if not p.exists():
        raise ConfigError(f"unknown map {spec!r} (not a built-in name or file)")
    return map_from_dict(parse_kv(p.read_text(), str(p)))


# --------------------------------------------------------------------------
# samplers
# --------------------------------------------------------------------------


def unit_pair_family(n_max: int, start: int = 1):
    """(r_{n,0}, r_{n,1}) for n = start..n_max: all 1-contracting."""
    return [(SpikeEnd(n, 0), SpikeEnd(n, 1)) for n in range(start, n_max + 1)]


def random_pairs(count: int, window: int = 10, D_max: float | None = None, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        a, b = (SpikeEnd(*map(int, rng.integers(-window, window + 1, 2))) for _ in range(2))
        if a != b and (D_max is None or pair_constant(a, b) <= D_max):
            out.append((a, b))
    return out


def random_tuples(count: int, window: int = 10, D_max: float | None = None, seed: int = 0):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = tuple(SpikeEnd(*map(int, rng.integers(-window, window + 1, 2))) for _ in range(4))
        if len(set(t)) == 4 and (D_max is None or max_pair_constant(t) <= D_max):
            out.append(t)
    return out


def ladder_tuples(n: int, spans=(1, 2, 3)):
    """(r_{k,0}, r_{k+j,0}, r_{k,1}, r_{k+j,1}) with both feet rows inside [-n, n]."""
    return [(SpikeEnd(k, 0), SpikeEnd(k + j, 0), SpikeEnd(k, 1), SpikeEnd(k + j, 1))
            for j in spans for k in range(-n, n - j + 1)]


def max_pair_constant(points) -> float:
    pts = list(points)
    return max(pair_constant(p, q) for i, p in enumerate(pts) for q in pts[i + 1:])


def _take(sampler, count):
    items = sampler(count) if callable(sampler) else list(sampler)
    items = list(items)[:count] if count is not None else list(items)
    if not items:
        raise InsufficientSamplesError("sampler produced no samples")
    return items


# --------------------------------------------------------------------------
# profiles
# --------------------------------------------------------------------------


@dataclass
class StabilityProfile:
    rows: list                     # (D_in, D_out, a, b), sorted by D_in
    verdict_bound: float
    verdict: str
    growth_rate: float | None
    envelope: list = field(default_factory=list)   # (D, sup D_out over D_in <= D)
    witnesses: list = field(default_factory=list)
    description: str = ""

    @property
    def stable(self) -> bool:
        return self.verdict == "stable-within-sample"


def stability_profile(f: BoundaryMap, pair_sampler, sample_count: int | None = None,
                      verdict_bound: float | None = None, factor: float = 4.0) -> StabilityProfile:
    """D_in / D_out for each sampled pair and the 2-stability verdict.

    The default verdict bound is ``factor`` times the largest sampled D_in
    (the gauge stratum). Exceeding it is a certificate of growth, with the
    offending pairs as witnesses; staying below it proves nothing beyond
    the sample.
    """
    pairs = _take(pair_sampler, sample_count)
    rows = []
    for a, b in pairs:
        fa, fb = f(a), f(b)
        rows.append((pair_constant(a, b), pair_constant(fa, fb), a, b))
    rows.sort(key=lambda r: (r[0], r[2], r[3]))
    D_stratum = max(r[0] for r in rows)
    bound = factor * D_stratum if verdict_bound is None else verdict_bound
    env, sup = [], 0.0
    for D_in, D_out, *_ in rows:
        sup = max(sup, D_out)
        if env and env[-1][0] == D_in:
            env[-1] = (D_in, sup)
        else:
            env.append((D_in, sup))
    witnesses = [r for r in rows if r[1] > bound]
    radius = np.array([max(math.hypot(*a.foot), math.hypot(*b.foot)) for _, _, a, b in rows])
    outs = np.array([r[1] for r in rows])
    rate = None
    if len(rows) >= 2 and np.ptp(radius) > 0:
        rate = float(np.polyfit(radius, outs, 1)[0])
    verdict = "growth-detected" if witnesses else "stable-within-sample"
    desc = f"{len(rows)} pairs, D_in <= {D_stratum:.6g}, bound {bound:.6g}"
    return StabilityProfile(rows, bound, verdict, rate, env, witnesses, desc)


@dataclass
class QmProfile:
    rows: list            # (cr_in, cr_out, tuple)
    D: float
    slope: float
    intercept: float
    description: str = ""


def fit_envelope(xs, ys) -> tuple[float, float]:
    """Least line y <= A x + B (A, B >= 0) covering all points.

    B is minimized first (it is forced by the points with x = 0), then A.
    Minimizing A first is degenerate: any cover with A = 0 and B = max y
    would win, hiding the multiplicative distortion.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) == 0:
        raise InsufficientSamplesError("no points to fit")
    zero = xs <= _ZERO
    B = max(0.0, float(ys[zero].max())) if zero.any() else 0.0
    pos = ~zero
    A = max(0.0, float(((ys[pos] - B) / xs[pos]).max())) if pos.any() else 0.0
    return A, B


def qm_profile(f: BoundaryMap, D: float, tuple_sampler, sample_count: int | None = None) -> QmProfile:
    tuples = _take(tuple_sampler, sample_count)
    rows = []
    for t in tuples:
        if max_pair_constant(t) > D + 1e-9:
            raise GeometryError(f"tuple {t} leaves the gauge stratum D <= {D}")
        img = tuple(f(a) for a in t)
        rows.append((paulin_value(*t), paulin_value(*img), t))
    A, B = fit_envelope([r[0] for r in rows], [r[1] for r in rows])
    return QmProfile(rows, D, A, B, f"{len(rows)} tuples, pairwise D <= {D:.6g}")
