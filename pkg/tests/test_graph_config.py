
import pytest

from morseqm.boundarymap import load_map
from morseqm.contracting import generic_bruteforce
from morseqm.errors import ConfigError, GeometryError, UnsupportedSpaceError
from morseqm.space import GraphSpace, RegularTree, SpikedPlane, load_space


@pytest.fixture
def square(tmp_path):
    # 4-cycle with a pendant path of length 2
    p = tmp_path / "g.txt"
    p.write_text("# u v w\n1 2 1\n2 3 1\n3 4 1\n4 1 1\n3 5 2.5\n")
    return GraphSpace.from_file(p)


def test_graph_distances(square):
    v = square.vertex
    assert square.distance(v(1), v(3)) == 2.0
    assert square.distance(v(1), v(5)) == 4.5
    mid = square.edge_point(4, 1.0)  # on edge 3-5
    assert square.distance(v(1), mid) == 3.0
    assert square.distance(square.edge_point(0, 0.25), square.edge_point(0, 0.75)) == 0.5


def test_graph_geodesic_unit_speed(square):
    p, q = square.edge_point(0, 0.5), square.edge_point(4, 2.0)
    g = square.geodesic(p, q)
    assert g.length == pytest.approx(square.distance(p, q))
    for s, t in [(0.0, 1.0), (0.25, 3.5), (1.5, 2.0)]:
        assert square.distance(g.point_at(s), g.point_at(t)) == pytest.approx(t - s)


def test_graph_has_no_boundary(square):
    with pytest.raises(UnsupportedSpaceError):
        square.bi_infinite_geodesic(1, 2)
    with pytest.raises(UnsupportedSpaceError):
        square.act((1,), square.vertex(1))


def test_graph_ball_sample(square):
    c = square.vertex(1)
    pts = square.ball_sample(c, 1.5, 0.25)
    assert all(square.distance(c, p) <= 1.5 + 1e-9 for p in pts)
    assert square.edge_point(1, 0.5) in pts  # rim point on edge 2-3


def test_graph_contracting_bruteforce(square):
    # a geodesic in a tree-like pendant edge: balls project to points
    g = square.geodesic(square.vertex(3), square.vertex(5))
    r = generic_bruteforce(g, square, window=1.5, resolution=0.25)
    assert 0.0 <= r.value <= 2.5


def test_bad_edges(tmp_path):
    for text in ["1 2\n", "0 1 1\n", "1 2 -1\n", "1 1 1\n", "1 x 1\n", ""]:
        p = tmp_path / "bad.txt"
        p.write_text(text)
        with pytest.raises(ConfigError):
            GraphSpace.from_file(p)


def test_space_configs(tmp_path):
    (tmp_path / "g.txt").write_text("1 2 1\n")
    cases = {
        "space = spiked_plane\nwindow = 4\n": SpikedPlane,
        "space = tree\ndegree = 3\ndepth_cap = 5  # comment\n": RegularTree,
        "space = graph\nedges = g.txt\n": GraphSpace,
    }
    for i, (text, cls) in enumerate(cases.items()):
        p = tmp_path / f"c{i}.cfg"
        p.write_text(text)
        assert isinstance(load_space(p), cls)
    t = load_space(tmp_path / "c1.cfg")
    assert (t.degree, t.depth_cap) == (3, 5)
    assert load_space(tmp_path / "c0.cfg").window == 4
    assert isinstance(load_space(None), SpikedPlane)


@pytest.mark.parametrize("text", ["space = torus\n", "window = 4\nwindow = 5\n", "nonsense\n",
                                  "space = tree\ndegree = four\n", "space = graph\n"])
def test_malformed_space_config(tmp_path, text):
    p = tmp_path / "bad.cfg"
    p.write_text(text)
    with pytest.raises(ConfigError):
        load_space(p)


def test_missing_config():
    with pytest.raises(ConfigError):
        load_space("/nonexistent/space.cfg")


def test_map_configs(tmp_path):
    from morseqm.space import SpikeEnd
    p = tmp_path / "m.cfg"
    p.write_text("map = table\ntable = 1 0 -1 0; -1 0 1 0\n")
    f = load_map(str(p))
    assert f(SpikeEnd(1, 0)) == SpikeEnd(-1, 0) and f(SpikeEnd(2, 0)) == SpikeEnd(2, 0)
    p.write_text("map = affine\nlinear = 0 1 1 0\nshift = 2 3\n")
    g = load_map(str(p))
    assert g(SpikeEnd(1, 5)) == SpikeEnd(7, 4)
    for bad in ["map = table\ntable = 1 0 2 0\n", "map = affine\nlinear = 2 0 0 1\n",
                "map = warp\n", "map = table\ntable = 1 0 2\n"]:
        p.write_text(bad)
        with pytest.raises(GeometryError):
            load_map(str(p))
