import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from morseqm.errors import DegeneratePairError, GeometryError, IncompatibleSpaceError, NotAsymptoticError
from morseqm.space import LatticeIsometry, Plane, Segment, Spike, SpikedPlane, SpikeEnd, SpikeRun
from oracles import PathGraph

SP = SpikedPlane()

# dyadic coordinates keep translations exact
coord = st.integers(-400, 400).map(lambda k: k / 16)
lattice = st.integers(-8, 8)
height = st.integers(0, 160).map(lambda k: k / 16)
planes = st.builds(Plane, coord, coord)
spikes = st.builds(Spike, lattice, lattice, height)
points = st.one_of(planes, spikes)
ends = st.builds(SpikeEnd, lattice, lattice)
isometries = st.builds(
    lambda lin, a, b: LatticeIsometry(lin, (a, b)),
    st.sampled_from([(1, 0, 0, 1), (0, -1, 1, 0), (-1, 0, 0, -1), (0, 1, -1, 0),
                     (1, 0, 0, -1), (-1, 0, 0, 1), (0, 1, 1, 0), (0, -1, -1, 0)]),
    st.integers(-20, 20), st.integers(-20, 20))


# ---- distance

def test_plane_distance():
    assert SP.distance(Plane(0, 0), Plane(3, 4)) == 5.0


def test_distinct_spikes_distance():
    assert SP.distance(Spike(0, 0, 2), Spike(1, 0, 3)) == 6.0


def test_same_spike_distance():
    assert SP.distance(Spike(5, 5, 7), Spike(5, 5, 3)) == 4.0


def test_foot_identification():
    assert SP.distance(Spike(2, -1, 0), Plane(2, -1)) == 0.0
    assert SP.distance(Spike(2, -1, 0), Spike(2, -1, 1.5)) == 1.5


def test_frozen_distances_match_path_oracle():
    g = PathGraph((-2, -2), (4, 4), [(0, 0), (1, 0), (1, 2)], h=0.5, top=8)
    cases = [
        (Spike(0, 0, 2), Spike(1, 0, 3), 6.0),
        (Spike(0, 0, 1), Plane(2, 0), 3.0),
        (Plane(0, 0), Spike(1, 2, 1), 1 + math.sqrt(5)),
        (Spike(0, 0, 1.5), Plane(1, 1), 1.5 + math.sqrt(2)),
    ]
    for p, q, frozen in cases:
        assert g.distance(p, q) == pytest.approx(frozen, abs=1e-12)
        assert SP.distance(p, q) == pytest.approx(frozen, abs=1e-15)


def test_rejects_foreign_points():
    with pytest.raises(IncompatibleSpaceError):
        SP.distance(Plane(0, 0), (0, 0))


def test_spike_height_nonnegative():
    with pytest.raises(GeometryError):
        Spike(0, 0, -1)


@given(points, points, points)
def test_metric_axioms(p, q, r):
    assert SP.distance(p, q) == SP.distance(q, p)
    assert SP.distance(p, p) == 0.0
    assert SP.distance(p, r) <= SP.distance(p, q) + SP.distance(q, r) + 1e-9


def test_metric_axioms_random_bulk():
    rng = np.random.default_rng(1)
    pts = []
    for _ in range(300):
        if rng.random() < 0.5:
            pts.append(Plane(*rng.uniform(-5, 5, 2)))
        else:
            pts.append(Spike(*map(int, rng.integers(-3, 4, 2)), float(rng.uniform(0, 5))))
    D = SP.pairwise(pts)
    for i in range(0, 300, 30):
        for j in range(300):
            assert D[i, j] == pytest.approx(SP.distance(pts[i], pts[j]), abs=1e-12)
    assert np.all(D == D.T)
    viol = D[:, None, :] - (D[:, :, None] + D[None, :, :])
    assert viol.max() <= 1e-9


# ---- geodesics

def test_geodesic_plane_segment():
    g = SP.geodesic(Plane(0, 0), Plane(1, 1))
    assert len(g.pieces) == 1 and isinstance(g.pieces[0], Segment)
    assert g.length == math.sqrt(2)


def test_geodesic_descend_then_segment():
    g = SP.geodesic(Spike(0, 0, 1), Plane(2, 0))
    kinds = [type(p).__name__ for p in g.pieces]
    assert kinds == ["SpikeRun", "Segment"]
    assert [p.length for p in g.pieces] == [1.0, 2.0]


def test_geodesic_same_spike():
    g = SP.geodesic(Spike(0, 0, 1), Spike(0, 0, 4))
    assert len(g.pieces) == 1 and isinstance(g.pieces[0], SpikeRun)
    assert g.length == 3.0


@given(points, points, st.floats(0, 1), st.floats(0, 1))
def test_geodesic_unit_speed(p, q, u, v):
    g = SP.geodesic(p, q)
    assert g.length == pytest.approx(SP.distance(p, q), abs=1e-9)
    s, t = sorted((g.lo + u * g.length, g.lo + v * g.length))
    assert SP.distance(g.point_at(s), g.point_at(t)) == pytest.approx(t - s, abs=1e-6)


def test_bi_infinite_structure():
    g = SP.bi_infinite_geodesic(SpikeEnd(0, 0), SpikeEnd(1, 0))
    a, seg, b = g.pieces
    assert isinstance(a, SpikeRun) and a.foot == (0, 0) and math.isinf(a.lo)
    assert seg.p0 == (0.0, 0.0) and seg.p1 == (1.0, 0.0) and seg.length == 1.0
    assert isinstance(b, SpikeRun) and b.foot == (1, 0) and math.isinf(b.hi)
    assert g.point_at(-3.0) == Spike(0, 0, 3.0)
    assert g.point_at(4.0) == Spike(1, 0, 3.0)


def test_bi_infinite_degenerate():
    with pytest.raises(DegeneratePairError):
        SP.bi_infinite_geodesic(SpikeEnd(0, 0), SpikeEnd(0, 0))


@given(ends, ends)
def test_bi_infinite_passes_feet(a, b):
    if a == b:
        return
    g = SP.bi_infinite_geodesic(a, b)
    seg = g.segments[0]
    assert seg.p0 == a.foot and seg.p1 == b.foot
    assert g.distance_to(Plane(*a.foot)) <= 1e-12
    assert g.distance_to(Plane(*b.foot)) <= 1e-12
    assert g.segments[0].length == math.hypot(a.m - b.m, a.n - b.n)


def test_ray_from_plane():
    r = SP.ray_from(Plane(0, 0), SpikeEnd(3, 4))
    assert [type(p).__name__ for p in r.pieces] == ["Segment", "SpikeRun"]
    assert r.pieces[0].length == 5.0
    assert r.point_at(7.0) == Spike(3, 4, 2.0)


def test_ray_from_own_spike():
    r = SP.ray_from(Spike(3, 4, 2), SpikeEnd(3, 4))
    assert len(r.pieces) == 1 and r.point_at(1.0) == Spike(3, 4, 3.0)


def test_ray_descend_cross_climb():
    r = SP.ray_from(Spike(0, 0, 1), SpikeEnd(1, 0))
    assert [type(p).__name__ for p in r.pieces] == ["SpikeRun", "Segment", "SpikeRun"]
    assert [r.pieces[0].length, r.pieces[1].length] == [1.0, 1.0]
    g = PathGraph((-1, -1), (2, 1), [(0, 0), (1, 0)], h=0.5, top=4)
    for t in (0.5, 1.5, 2.5, 4.0):
        assert g.distance(Spike(0, 0, 1), r.point_at(t)) == pytest.approx(t)


# ---- balls

def test_ball_radius_zero():
    net = SP.ball_sample(Plane(0.5, 0.5), 0, 0.1)
    assert list(net) == [Plane(0.5, 0.5)]


def test_ball_contents_and_net_property():
    net = SP.ball_sample(Plane(0, 0), 1, 0.5)
    for p in [Plane(1, 0), Plane(-1, 0), Plane(0, 1), Plane(0, -1), Spike(0, 0, 1), Spike(1, 0, 0)]:
        assert p in net
    pts = list(net)
    assert all(SP.distance(Plane(0, 0), p) <= 1 + 1e-9 for p in pts)
    rng = np.random.default_rng(0)
    for _ in range(300):
        r, th = math.sqrt(rng.random()), rng.uniform(0, 2 * math.pi)
        probe = Plane(r * math.cos(th), r * math.sin(th))
        assert min(SP.distance(probe, p) for p in pts) <= 0.5 + 1e-9
    for _ in range(100):
        probe = Spike(0, 0, float(rng.uniform(0, 1)))
        assert min(SP.distance(probe, p) for p in pts) <= 0.5 + 1e-9


def test_ball_high_on_spike():
    net = SP.ball_sample(Spike(0, 0, 5), 1, 0.25)
    pts = list(net)
    assert pts and all(isinstance(p, Spike) and p.foot == (0, 0) and 4 <= p.t <= 6 for p in pts)


def test_ball_bad_resolution():
    with pytest.raises(GeometryError):
        SP.ball_sample(Plane(0, 0), 1, 0)


# ---- group action

def test_translation_examples():
    g = LatticeIsometry.translation(2, 3)
    assert SP.act(g, Plane(0, 0)) == Plane(2, 3)
    assert SP.act(g, SpikeEnd(1, 1)) == SpikeEnd(3, 4)
    gam = SP.bi_infinite_geodesic(SpikeEnd(0, 0), SpikeEnd(2, 1))
    ident = SP.act(LatticeIsometry(), gam)
    assert ident.pieces == gam.pieces


@given(isometries, points, points)
def test_action_is_isometric(g, p, q):
    assert SP.distance(SP.act(g, p), SP.act(g, q)) == SP.distance(p, q)


@given(isometries, points)
def test_action_inverse(g, p):
    assert SP.act(g.inverse(), SP.act(g, p)) == p


@given(isometries, ends)
def test_action_permutes_ends(g, a):
    b = SP.act(g, a)
    assert isinstance(b, SpikeEnd) and SP.act(g.inverse(), b) == a


def test_non_lattice_isometry_rejected():
    with pytest.raises(GeometryError):
        LatticeIsometry((2, 0, 0, 1), (0, 0))


# ---- asymptotic rays

def test_hausdorff_same_ray():
    r = SP.ray_from(Plane(0, 0), SpikeEnd(0, 5))
    assert SP.asymptotic_hausdorff(r, r, 50) <= 1e-12


@pytest.mark.parametrize("horizon", [1, 5, 20, 100])
def test_hausdorff_merge_on_spike(horizon):
    a = SP.ray_from(Plane(0, 0), SpikeEnd(0, 5))
    b = SP.ray_from(Plane(1, 0), SpikeEnd(0, 5))
    assert SP.asymptotic_hausdorff(a, b, horizon) <= 1.0 + 1e-9


def test_hausdorff_distinct_ends():
    a = SP.ray_from(Plane(0, 0), SpikeEnd(0, 5))
    b = SP.ray_from(Plane(0, 0), SpikeEnd(1, 5))
    with pytest.raises(NotAsymptoticError):
        SP.asymptotic_hausdorff(a, b, 10)
