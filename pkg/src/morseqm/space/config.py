"""Key-value config files selecting a model space.

Format: one ``key = value`` per line, ``#`` starts a comment. Keys:

    space = spiked_plane | tree | graph
    window = 10          # spiked plane: lattice window for boundary samplers
    degree = 4           # tree
    depth_cap = 6        # tree
    edges = graph.txt    # graph: edge list, relative to the config file
"""

from __future__ import annotations

from pathlib import Path

from ..errors import ConfigError
from .graph import GraphSpace
from .spiked import SpikedPlane
from .tree import RegularTree


def parse_kv(text: str, source: str = "<config>") -> dict[str, str]:
    out: dict[str, str] = {}
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{ln}: expected 'key = value'")
        k, v = (s.strip() for s in line.split("=", 1))
        if not k:
            raise ConfigError(f"{source}:{ln}: empty key")
        if k in out:
            raise ConfigError(f"{source}:{ln}: duplicate key {k!r}")
        out[k] = v
    return out


def _int(cfg, key, default):
    try:
        return int(cfg.get(key, default))
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {cfg[key]!r}") from None


def space_from_dict(cfg: dict, base: Path | None = None):
    kind = cfg.get("space", "spiked_plane")
    if kind == "spiked_plane":
        return SpikedPlane(window=_int(cfg, "window", 10))
    if kind == "tree":
        return RegularTree(degree=_int(cfg, "degree", 4), depth_cap=_int(cfg, "depth_cap", 6))
    if kind == "graph":
        if "edges" not in cfg:
            raise ConfigError("graph space needs an 'edges' path")
        p = Path(cfg["edges"])
        if base is not None and not p.is_absolute():
            p = base / p
        return GraphSpace.from_file(p)
    raise ConfigError(f"unknown space kind {kind!r}")


def load_space(path=None):
    """Space described by the config at ``path`` (the spiked plane if None)."""
    if path is None:
        return SpikedPlane()
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read space config {path}: {exc}") from None
    return space_from_dict(parse_kv(text, str(p)), p.parent)
