"""Command-line entry point: ``morseqm <subcommand> [options]``.

Every subcommand writes ``<out>/<subcommand>.csv`` (header row first) and
``<out>/<subcommand>.json`` (summary with fixed field names, including the
``schema`` tag below). Errors print a JSON record ``{"error": code,
"message": ...}`` to stderr and exit 2; a failure certificate from
``extend`` exits 3.
"""

from __future__ import annotations

import argparse
import csv
import json
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .boundarymap import (
    ladder_tuples,
    load_map,
    qm_profile,
    random_pairs,
    random_tuples,
    stability_profile,
    unit_pair_family,
)
from .centers import IdealTriangle, project, strict_gate_gap
from .contracting import bruteforce_details, contracting_constant_analytic, pair_constant
from .crossratio import compare_details, min_flip, paulin_value
from .errors import ConfigError, GeometryError
from .extension import ExtensionConfig, run_extension, swap_certificate, window_points
from .space.config import load_space
from .space.spiked import LatticeIsometry, Spike, SpikedPlane, SpikeEnd
from .space.tree import RegularTree

SCHEMA = 1
EXIT_ERROR = 2
EXIT_CERTIFICATE = 3


def schema(name: str) -> str:
    return f"morseqm/{name}/{SCHEMA}"


# --------------------------------------------------------------------------
# parsing helpers
# --------------------------------------------------------------------------


def parse_end(text: str, space):
    """``m,n`` for a spike; ``prefix(period)`` in digits for a tree end."""
    text = text.strip()
    if isinstance(space, RegularTree):
        m = re.fullmatch(r"(\d*)\((\d+)\)", text)
        if not m:
            raise ConfigError(f"tree end {text!r} must look like 01(2)")
        return space.end(tuple(map(int, m.group(1))), tuple(map(int, m.group(2))))
    if isinstance(space, SpikedPlane):
        try:
            m, n = (int(v) for v in text.split(","))
        except ValueError:
            raise ConfigError(f"spike {text!r} must look like m,n") from None
        return SpikeEnd(m, n)
    raise GeometryError(f"{space!r} has no boundary points to parse")


def parse_ends(text: str, space, count: int, sep: str = ";"):
    parts = [p for p in text.split(sep) if p.strip()]
    if len(parts) != count:
        raise ConfigError(f"{text!r}: expected {count} points separated by {sep!r}")
    return tuple(parse_end(p, space) for p in parts)


def read_tuples_csv(path, space):
    """Rows of eight integers (four feet); a non-numeric first row is a header."""
    if not isinstance(space, SpikedPlane):
        raise ConfigError("tuple CSV input holds spiked-plane feet")
    out = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                v = [int(c) for c in row]
            except ValueError:
                if i == 0:
                    continue
                raise ConfigError(f"{path}:{i + 1}: expected integers") from None
            if len(v) != 8:
                raise ConfigError(f"{path}:{i + 1}: expected 8 integers, got {len(v)}")
            out.append(tuple(SpikeEnd(v[k], v[k + 1]) for k in range(0, 8, 2)))
    if not out:
        raise ConfigError(f"{path}: no tuples")
    return out


def fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if v is None:
        return ""
    return str(v)


def pt(p) -> str:
    if isinstance(p, SpikeEnd):
        return f"{p.m},{p.n}"
    if hasattr(p, "foot") and hasattr(p, "height"):
        x, y = p.foot
        return f"{x!r},{y!r},{p.height!r}"
    return str(p)


def write_outputs(out: Path, name: str, header, rows, summary: dict):
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{name}.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])
    summary = {"schema": schema(name), "version": __version__, **summary}
    with open(out / f"{name}.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return summary


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)



def _pmap(fn, items, workers):
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def _grid_range(space):
    return getattr(space, "window", 10)


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def _contracting_row(args):
    space, a, b, brute, window, res = args
    g = space.bi_infinite_geodesic(a, b)
    try:
        D = contracting_constant_analytic(g, space)
    except GeometryError:
        D = None
    bf = bruteforce_details(g, space, window, res) if brute else None
    return (pt(a), pt(b), D, None if bf is None else bf.value, window if brute else None, res if brute else None)


def cmd_contracting(ns, space):
    if ns.pair:
        pairs = [parse_ends(p, space, 2) for p in ns.pair]
    else:
        if not isinstance(space, SpikedPlane):
            raise ConfigError("the default pair family lives in the spiked plane; pass --pair")
        pairs = []
        for n in range(1, ns.n_max + 1):
            pairs.append((SpikeEnd(n, 0), SpikeEnd(n, 1)))
            pairs.append((SpikeEnd(-n, 0), SpikeEnd(n, 1)))
    items = []
    for i, (a, b) in enumerate(pairs):
        brute = ns.pair is not None or (i // 2 + 1) <= ns.bruteforce_max
        items.append((space, a, b, brute and ns.bruteforce_max > 0, ns.window, ns.resolution))
    rows = _pmap(_contracting_row, items, ns.workers)
    gaps = [abs(r[2] - r[3]) for r in rows if r[2] is not None and r[3] is not None]
    summary = {"pairs": len(rows), "max_bruteforce_gap": max(gaps) if gaps else None,
               "resolution": ns.resolution, "window": ns.window}
    rows = [(*r, ns.seed) for r in rows]
    return rows, ["a", "b", "D_analytic", "D_bruteforce", "window", "resolution", "seed"], summary, 0


def _random_triangles(space, count, seed, window):
    rng = np.random.default_rng(seed)
    if isinstance(space, RegularTree):
        ends = space.boundary_points()
        out = []
        while len(out) < count:
            idx = rng.choice(len(ends), 3, replace=False)
            out.append(tuple(ends[i] for i in idx))
        return out
    out = []
    while len(out) < count:
        t = tuple(SpikeEnd(*map(int, rng.integers(-window, window + 1, 2))) for _ in range(3))
        if len(set(t)) == 3:
            out.append(t)
    return out


def _centers_row(args):
    space, t, res, horizon = args
    T = IdealTriangle(*t, space=space)
    r = project(T, res, horizon=horizon)
    gate = max((g.distance for g in r.gates), default=None)
    strict = strict_gate_gap(T, r.K, res) if isinstance(space, SpikedPlane) else 0.0
    return (*(pt(v) for v in t), pt(r.center), r.K_min, r.slim, r.K, r.E_K_diameter, gate, strict)


def cmd_centers(ns, space):
    tris = [parse_ends(t, space, 3) for t in ns.triangle] if ns.triangle else \
        _random_triangles(space, ns.random, ns.seed, _grid_range(space))
    rows = _pmap(_centers_row, [(space, t, ns.resolution, ns.horizon) for t in tris], ns.workers)
    summary = {"triangles": len(rows), "resolution": ns.resolution,
               "max_E_K_diameter": max((r[7] for r in rows if r[7] is not None), default=None),
               "max_slim": max(r[5] for r in rows),
               "max_gate_distance": max((r[8] for r in rows if r[8] is not None), default=None)}
    header = ["a", "b", "c", "center", "K_min", "slim", "K", "E_K_diameter", "gate_distance", "strict_gate_gap"]
    return rows, header, summary, 0


def _crossratio_row(args):
    space, t, res = args
    c = compare_details(*t, resolution=res, space=space)
    label, val = min_flip(*t, space=space)
    return (*(pt(v) for v in t), c.paulin, c.centers, c.difference, c.bound, label, val.value)


def cmd_crossratio(ns, space):
    if ns.tuples_csv:
        tuples = read_tuples_csv(ns.tuples_csv, space)
    elif ns.tuple:
        tuples = [parse_ends(t, space, 4) for t in ns.tuple]
    elif isinstance(space, SpikedPlane):
        tuples = random_tuples(ns.random, _grid_range(space), seed=ns.seed)
    else:
        rng = np.random.default_rng(ns.seed)
        ends = space.boundary_points()
        tuples = [tuple(ends[i] for i in rng.choice(len(ends), 4, replace=False)) for _ in range(ns.random)]
    rows = _pmap(_crossratio_row, [(space, t, ns.resolution) for t in tuples], ns.workers)
    ok = [r[6] <= r[7] + 1e-9 for r in rows if r[6] is not None]
    summary = {"tuples": len(rows), "resolution": ns.resolution,
               "all_within_bound": all(ok) if ok else None,
               "max_min_flip": max(r[9] for r in rows)}
    header = ["a", "b", "c", "d", "paulin", "centers", "difference", "bound", "min_flip", "min_flip_value"]
    return rows, header, summary, 0


def cmd_stability(ns, space):
    f = load_map(ns.map)
    pairs = random_pairs(ns.random, ns.window, seed=ns.seed) if ns.random else unit_pair_family(ns.n_max)
    prof = stability_profile(f, pairs, verdict_bound=ns.bound)
    rows = [(pt(a), pt(b), din, dout, dout > prof.verdict_bound) for din, dout, a, b in prof.rows]
    rows.sort(key=lambda r: (r[2], r[0], r[1]))
    summary = {"map": f.name, "verdict": prof.verdict, "verdict_bound": prof.verdict_bound,
               "growth_rate": prof.growth_rate, "witness_count": len(prof.witnesses),
               "witnesses": [[pt(a), pt(b), dout] for _, dout, a, b in prof.witnesses],
               "description": prof.description}
    return rows, ["a", "b", "D_in", "D_out", "witness"], summary, 0


def cmd_qm(ns, space):
    f = load_map(ns.map)
    rows_all, fits = [], []
    for n in ns.n:
        tuples = ladder_tuples(n)
        D = max(max(pair_constant(p, q) for i, p in enumerate(t) for q in t[i + 1:]) for t in tuples)
        prof = qm_profile(f, D, tuples)
        fits.append({"n": n, "D": D, "slope": prof.slope, "intercept": prof.intercept})
        rows_all += [(n, ";".join(pt(v) for v in t), ci, co) for ci, co, t in prof.rows]
    summary = {"map": f.name, "fits": fits, "slope": fits[-1]["slope"], "intercept": fits[-1]["intercept"]}
    return rows_all, ["n", "tuple", "cr_in", "cr_out"], summary, 0


def _isometry_of(name):
    if name == "identity":
        return LatticeIsometry.translation(0, 0)
    if name == "axis-swap":
        return LatticeIsometry.axis_swap()
    if name.startswith("translation:"):
        a, b = (int(v) for v in name.split(":", 1)[1].split(","))
        return LatticeIsometry.translation(a, b)
    return None


def cmd_extend(ns, space):
    if not isinstance(space, SpikedPlane):
        raise ConfigError("extend runs on the spiked plane only")
    f = load_map(ns.map)
    cfg = ExtensionConfig(R=ns.R, triple_search_radius=ns.search_radius, D_cap=ns.D_cap,
                          resolution=ns.resolution, sanity_bound=ns.sanity_bound)
    rng = np.random.default_rng(ns.seed)
    feet = rng.integers(-int(ns.window), int(ns.window) + 1, (ns.spikes, 2))
    heights = rng.choice([0.5, 5.0, 50.0], ns.spikes)
    spikes = [Spike(int(m), int(n), float(t)) for (m, n), t in zip(feet, heights)]
    pts = sorted(set(window_points(ns.window, ns.step, spikes=spikes)), key=lambda p: (p.foot, p.height))
    res = run_extension(f, cfg, pts, isometry=_isometry_of(ns.map), ray_count=ns.rays,
                        horizon=ns.horizon, workers=ns.workers)
    rows = [(pt(d.x), pt(d.h), d.pi_diameter, d.method, d.candidates) for d in res.points]
    bound = 2 * (cfg.R + res.pi_diameter_max)
    summary = {"map": f.name, "R": cfg.R, "D_cap": cfg.D_cap, "triple_search_radius": cfg.triple_search_radius,
               "resolution": cfg.resolution, "sanity_bound": cfg.sanity_bound, "horizon": ns.horizon,
               "points": len(pts), "lambda": res.lam, "epsilon": res.eps,
               "quasi_inverse_defect": res.quasi_inverse_defect,
               "boundary_agreement": res.boundary_agreement, "pi_diameter_max": res.pi_diameter_max,
               "bound": bound, "isometry_displacement": res.displacement,
               "warnings": sorted(set(res.warnings))[:50], "warning_count": len(res.warnings),
               "certificate": res.certificate}
    code = 0
    if res.certificate is not None:
        if f.name == "swap":
            summary["swap_family"] = swap_certificate(cfg, horizon=ns.horizon)
        code = EXIT_CERTIFICATE
    return rows, ["x", "h", "pi_diameter", "method", "candidates"], summary, code


def example33_rows(n_max: int):
    rows = []
    for n in range(1, n_max + 1):
        m = n + 1
        D_in = pair_constant(SpikeEnd(n, 0), SpikeEnd(n, 1))
        D_out = pair_constant(SpikeEnd(-n, 0), SpikeEnd(n, 1))
        cr_in = paulin_value(SpikeEnd(n, 0), SpikeEnd(m, 0), SpikeEnd(n, 1), SpikeEnd(m, 1))
        cr_out = paulin_value(SpikeEnd(-n, 0), SpikeEnd(-m, 0), SpikeEnd(n, 1), SpikeEnd(m, 1))
        rows.append((n, D_in, D_out, cr_in, cr_out))
    return rows


def cmd_example33(ns, space):
    rows = example33_rows(ns.n_max)
    summary = {"n_max": ns.n_max,
               "D_in_all_one": all(r[1] == 1.0 for r in rows),
               "D_out_exceeds_2n": all(r[2] > 2 * r[0] for r in rows),
               "cr_in_constant": sorted({r[3] for r in rows}),
               "cr_out_exceeds_2n_minus_1": all(r[4] > 2 * r[0] - 1 for r in rows)}
    return rows, ["n", "D_in", "D_out", "cr_in", "cr_out"], summary, 0


COMMANDS = {
    "contracting": cmd_contracting,
    "centers": cmd_centers,
    "crossratio": cmd_crossratio,
    "stability": cmd_stability,
    "qm": cmd_qm,
    "extend": cmd_extend,
    "example33": cmd_example33,
}


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        exc = ConfigError(message)
        if message.startswith("argument command"):
            exc.code = "unknown-subcommand"
        raise exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="space config file (default: spiked plane)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", type=Path, default=Path("out"))
    common.add_argument("--workers", type=int, default=1)

    p = _Parser(prog="morseqm", description="Morse-boundary experiments on model spaces")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    c = sub.add_parser("contracting", parents=[common], help="contracting constants of spike pairs")
    c.add_argument("--pair", action="append", help="'m,n;m,n' (repeatable)")
    c.add_argument("--n-max", type=int, default=20)
    c.add_argument("--bruteforce-max", type=int, default=5, help="brute-force n <= this in the default family")
    c.add_argument("--window", type=float, default=10.0)
    c.add_argument("--resolution", type=float, default=0.1)

    c = sub.add_parser("centers", parents=[common], help="centers, slim constants and E_K of ideal triangles")
    c.add_argument("--triangle", action="append", help="'a;b;c' (repeatable)")
    c.add_argument("--random", type=int, default=10)
    c.add_argument("--resolution", type=float, default=0.1)
    c.add_argument("--horizon", type=float, default=100.0)

    c = sub.add_parser("crossratio", parents=[common], help="cross-ratios and the definition comparison")
    c.add_argument("--tuple", action="append", help="'a;b;c;d' (repeatable)")
    c.add_argument("--tuples-csv", type=Path, help="CSV of eight integers per row (four feet)")
    c.add_argument("--random", type=int, default=10)
    c.add_argument("--resolution", type=float, default=0.1)

    c = sub.add_parser("stability", parents=[common], help="2-stability profile of a boundary map")
    c.add_argument("--map", default="identity")
    c.add_argument("--n-max", type=int, default=20)
    c.add_argument("--random", type=int, default=0, help="random pairs instead of the unit pair family")
    c.add_argument("--window", type=int, default=10)
    c.add_argument("--bound", type=float, default=None)

    c = sub.add_parser("qm", parents=[common], help="quasi-mobius profile of a boundary map")
    c.add_argument("--map", default="identity")
    c.add_argument("--n", type=int, nargs="+", default=[5, 10, 20])

    c = sub.add_parser("extend", parents=[common], help="extend a boundary map to the interior")
    c.add_argument("--map", default="identity")
    c.add_argument("--R", type=float, default=1.0)
    c.add_argument("--search-radius", type=float, default=None)
    c.add_argument("--D-cap", type=float, default=1.5)
    c.add_argument("--resolution", type=float, default=0.1)
    c.add_argument("--sanity-bound", type=float, default=None)
    c.add_argument("--window", type=float, default=20.0, help="half-width of the sample square")
    c.add_argument("--step", type=float, default=2.0)
    c.add_argument("--spikes", type=int, default=8, help="random spike sample points")
    c.add_argument("--rays", type=int, default=12)
    c.add_argument("--horizon", type=float, default=1e3)

    c = sub.add_parser("example33", parents=[common], help="the spiked-plane swap example table")
    c.add_argument("--n-max", type=int, default=20)
    return p


def error_record(exc: Exception) -> dict:
    return {"error": getattr(exc, "code", "error"), "message": str(exc), "type": type(exc).__name__}


def run(argv=None) -> int:
    out = None
    try:
        ns = build_parser().parse_args(argv)
        if ns.command is None:
            raise ConfigError("missing subcommand; choose from " + ", ".join(COMMANDS))
        out = ns.out
        if ns.workers < 1:
            raise ConfigError("--workers must be >= 1")
        space = load_space(ns.space)
        rows, header, summary, code = COMMANDS[ns.command](ns, space)
        summary = {"command": ns.command, "seed": ns.seed, **summary}
        write_outputs(out, ns.command, header, rows, summary)
        print(json.dumps({k: summary[k] for k in summary if k in ("command", "verdict", "slope", "lambda",
                                                                    "certificate", "pairs", "tuples",
                                                                    "triangles", "n_max")},
                         default=_json_default))
        return code
    except (GeometryError, OSError) as exc:
        rec = error_record(exc)
        print(json.dumps(rec), file=sys.stderr)
        if out is not None:
            try:
                out.mkdir(parents=True, exist_ok=True)
                (out / "error.json").write_text(json.dumps(rec, indent=2) + "\n")
            except OSError:
                pass
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())
