"""Model geodesic spaces: the spiked plane, regular trees and weighted graphs."""

from .config import load_space, parse_kv, space_from_dict
from .graph import GraphGeodesic, GraphPoint, GraphSpace
from .spiked import (
    Geodesic,
    LatticeIsometry,
    Plane,
    PointNet,
    Segment,
    Spike,
    SpikedPlane,
    SpikeEnd,
    SpikeRun,
    euclid,
    snap,
)
from .tree import RegularTree, TreeEnd, TreeGeodesic, TreePoint, common_prefix

__all__ = [
    "Geodesic", "GraphGeodesic", "GraphPoint", "GraphSpace", "LatticeIsometry", "Plane",
    "PointNet", "RegularTree", "Segment", "Spike", "SpikeEnd", "SpikeRun", "SpikedPlane",
    "TreeEnd", "TreeGeodesic", "TreePoint", "common_prefix", "euclid", "load_space",
    "parse_kv", "snap", "space_from_dict",
]
