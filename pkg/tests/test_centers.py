import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.distance import pdist

from morseqm.centers import (
    IdealTriangle,
    center_of,
    e_k_diameter_bound,
    e_k_set,
    gates,
    project,
    side_distance,
    slim_constant,
    strict_gate_gap,
    triangle,
)
from morseqm.errors import DegeneratePairError, EmptySetError, InsufficientHorizonError
from morseqm.space import LatticeIsometry, Plane, Spike, SpikedPlane, SpikeEnd
from oracles import PathGraph, brute_minmax_center, point_to_segment

SP = SpikedPlane()
feet = st.tuples(st.integers(-10, 10), st.integers(-10, 10))
triples = st.lists(feet, min_size=3, max_size=3, unique=True)


def side(a, b):
    return SP.bi_infinite_geodesic(SpikeEnd(*a), SpikeEnd(*b))


# ---- side distance

def test_side_distance_on_side():
    s = side((0, 0), (3, 1))
    assert side_distance(Plane(1.5, 0.5), s) <= 1e-12
    assert side_distance(Spike(3, 1, 7), s) == 0.0


def test_side_distance_point_to_segment():
    assert side_distance(Plane(0, 1), side((-1, 0), (1, 0))) == 1.0


def test_side_distance_from_spike():
    s = side((1, 1), (2, 1))
    frozen = 3 + math.sqrt(2)
    assert side_distance(Spike(0, 0, 3), s) == pytest.approx(frozen, abs=1e-15)
    g = PathGraph((-1, -1), (3, 2), [(0, 0), (1, 1), (2, 1)], h=0.5, top=6)
    on_side = [Plane(1.0, 1.0), Plane(1.5, 1.0), Plane(2.0, 1.0), Spike(1, 1, 0.5), Spike(2, 1, 0.5)]
    assert g.distance_to_set(Spike(0, 0, 3), on_side) == pytest.approx(frozen, abs=1e-12)


@settings(max_examples=40)
@given(st.floats(-5, 5), st.floats(-5, 5), feet, feet)
def test_side_distance_matches_dense_sampling(x, y, a, b):
    if a == b:
        return
    d = side_distance(Plane(x, y), side(a, b))
    assert d == pytest.approx(point_to_segment(x, y, *a, *b), abs=1e-3)


# ---- slim constants

def slim_oracle(fs, n=4001):
    """Dense sampling of each planar side against the other two segments."""
    worst = 0.0
    segs = [(fs[0], fs[1]), (fs[1], fs[2]), (fs[2], fs[0])]
    for i, (a, b) in enumerate(segs):
        for u in np.linspace(0, 1, n // 20):
            px, py = a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])
            worst = max(worst, min(point_to_segment(px, py, *c, *d, samples=n)
                                   for j, (c, d) in enumerate(segs) if j != i))
    return worst


def test_slim_right_triangle():
    T = triangle((0, 0), (4, 0), (0, 4))
    s = slim_constant(T, resolution=0.1)
    assert s > 0
    assert s == pytest.approx(slim_oracle([(0, 0), (4, 0), (0, 4)]), abs=0.1)
    # the hypotenuse midpoint is 2 from both legs; sampled at the resolution
    assert s == pytest.approx(2.0, abs=0.1)


def test_slim_thin_triangle():
    assert slim_constant(triangle((0, 0), (1, 0), (100, 0)), horizon=100) <= 0.1


def test_slim_horizon_error():
    with pytest.raises(InsufficientHorizonError):
        slim_constant(triangle((0, 0), (1, 0), (100, 0)), horizon=10)


@settings(max_examples=15)
@given(triples)
def test_slim_matches_oracle(fs):
    T = triangle(*fs)
    assert slim_constant(T, resolution=0.1) == pytest.approx(slim_oracle(fs), abs=0.1)


# ---- E_K

def test_e_k_empty_at_zero_on_fat_triangle():
    assert len(e_k_set(triangle((0, 0), (4, 0), (0, 4)), 0.0)) == 0


def test_e_k_nonempty_and_bounded():
    T = triangle((0, 0), (4, 0), (0, 4))
    K = slim_constant(T) + 0.5
    net = e_k_set(T, K)
    assert len(net) > 0
    for p in net:
        assert max(s.distance_to(p) for s in T.sides) <= K + 1e-9
    assert e_k_diameter_bound(T, K) < 4 * 4


def grid_e_k_diameter(fs, K, h=0.01):
    """Planar E_K on a fine grid with closed-form segment distances."""
    xs = np.arange(-K - 1, K + 2, h)
    P = np.array([(x, y) for x in xs for y in xs])
    worst = np.zeros(len(P))
    for a, b in [(fs[0], fs[1]), (fs[1], fs[2]), (fs[2], fs[0])]:
        a, b = np.array(a, float), np.array(b, float)
        d = b - a
        u = np.clip(((P - a) @ d) / (d @ d), 0, 1)
        worst = np.maximum(worst, np.hypot(*(P - a - u[:, None] * d).T))
    return float(pdist(P[worst <= K]).max())


def test_e_k_diameter_unit_triangle_frozen():
    T = triangle((0, 0), (1, 0), (0, 1))
    L = e_k_diameter_bound(T, 1.0)
    oracle = grid_e_k_diameter([(0, 0), (1, 0), (0, 1)], 1.0)
    assert oracle == pytest.approx(2.0, abs=0.01)
    assert L == pytest.approx(2.0, abs=0.1)


def test_e_k_diameter_empty_error():
    with pytest.raises(EmptySetError):
        e_k_diameter_bound(triangle((0, 0), (4, 0), (0, 4)), 0.0)


def test_e_k_nonempty_at_slim_plus_resolution():
    rng = np.random.default_rng(2)
    for _ in range(20):
        fs = [tuple(map(int, rng.integers(-8, 9, 2))) for _ in range(3)]
        if len(set(fs)) < 3:
            continue
        T = triangle(*fs)
        assert len(e_k_set(T, slim_constant(T) + 0.1)) > 0


# ---- projection

def test_project_unit_triangle():
    T = triangle((0, 0), (1, 0), (0, 1))
    r = project(T)
    x, y = r.center.foot
    assert x >= -1e-12 and y >= -1e-12 and x + y <= 1 + 1e-12
    assert r.K_min <= 0.5
    fine = brute_minmax_center([(0, 0), (1, 0), (0, 1)], 0.002)
    assert fine <= r.K_min + 1e-9
    assert r.K_min <= fine + 0.1
    assert max(s.distance_to(r.center) for s in T.sides) == pytest.approx(r.K_min, abs=1e-12)


def test_project_equivariant_example():
    T = triangle((0, 0), (3, 1), (-2, 5))
    g = LatticeIsometry.translation(7, -3)
    assert center_of(T.translated(g)) == SP.act(g, center_of(T))


@settings(max_examples=30)
@given(triples, st.integers(-50, 50), st.integers(-50, 50))
def test_project_equivariant(fs, u, v):
    T = triangle(*fs)
    g = LatticeIsometry.translation(u, v)
    r1, r2 = project(T, details=False), project(T.translated(g), details=False)
    assert r2.center == SP.act(g, r1.center)
    assert r2.K_min == r1.K_min


def test_project_vertex_order_irrelevant():
    a, b, c = SpikeEnd(0, 0), SpikeEnd(5, 1), SpikeEnd(2, 4)
    assert center_of(IdealTriangle(a, b, c)) == center_of(IdealTriangle(c, a, b))


def test_project_degenerate():
    with pytest.raises(DegeneratePairError):
        triangle((0, 0), (0, 0), (1, 1))


def test_center_within_k_and_gates():
    rng = np.random.default_rng(5)
    n = 0
    while n < 15:
        fs = [tuple(map(int, rng.integers(-6, 7, 2))) for _ in range(3)]
        if len(set(fs)) < 3:
            continue
        n += 1
        T = triangle(*fs)
        r = project(T)
        assert max(s.distance_to(r.center) for s in T.sides) <= r.K + 1e-9
        assert r.E_K_diameter is not None
        for gt in r.gates:
            assert gt.distance <= r.slim + 2 * r.resolution + 1e-9
            assert gt.tail <= r.slim + 2 * r.resolution + 1e-9
            assert gt.q_level <= 2 * r.K + 1e-9


def test_strict_gate_gap_skewed_triangle():
    # the literal two-points-in-E_K gate fails here; the measured gap is recorded
    T = triangle((0, 0), (7, 1), (2, 9))
    K = slim_constant(T) + 0.1
    gap = strict_gate_gap(T, K)
    assert gap > slim_constant(T) + 0.2
    assert all(g.distance <= K for g in gates(T, K))
