"""Command-line front end.

Subcommands ``min``, ``capacity``, ``approx``, ``oracle`` and ``minkowski``
print a short summary and optionally write a JSON report (``--json``) and an
SVG drawing (``--svg``).  Exit status is 0 on success, 1 for invalid input
and 2 when a numerical method fails to converge.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import time
from typing import Optional, Sequence

from . import approx, geom, minkowski, oracle, orbits
from .errors import ConvergenceError, ValidationError
from .report import Report, from_min_report, num, pts
from .svg import render_svg

TABLE_HELP = ("table: JSON file {\"vertices\": [[x, y], ...]}, ngon:N@unit-circle, "
              "ngon:N@side=S or triangle:x1,y1,x2,y2,x3,y3")


def parse_table(spec: str) -> geom.ConvexPolygon:
    """Polygon from a file name or one of the shorthand generators."""
    m = re.fullmatch(r"ngon:(\d+)@(unit-circle|side=(.+))", spec)
    if m:
        n = int(m.group(1))
        if m.group(2) == "unit-circle":
            return geom.regular_polygon(n)
        return geom.regular_polygon(n, side=_float(m.group(3), spec))
    if spec.startswith("triangle:"):
        vals = [_float(x, spec) for x in spec[len("triangle:"):].split(",")]
        if len(vals) != 6:
            raise ValidationError(f"{spec!r}: a triangle needs six coordinates")
        return geom.Triangle([vals[0:2], vals[2:4], vals[4:6]])
    if spec.startswith("ngon:"):
        raise ValidationError(f"bad polygon shorthand {spec!r}")
    return geom.read_polygon_json(spec)


def _float(text: str, spec: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise ValidationError(f"{spec!r}: {text!r} is not a number") from None
    if not math.isfinite(x):
        raise ValidationError(f"{spec!r}: {text!r} is not finite")
    return x


def _polygon_input(spec: str, P: geom.ConvexPolygon) -> dict:
    return {"table": spec, "vertices": pts(P.vertices)}


def cmd_min(args) -> Report:
    P = parse_table(args.table)
    return from_min_report("min", _polygon_input(args.table, P), orbits.shortest_orbits(P, full=args.full))


def cmd_capacity(args) -> Report:
    P = parse_table(args.table)
    return from_min_report("capacity", _polygon_input(args.table, P), orbits.shortest_orbits(P))


def cmd_approx(args) -> Report:
    B = approx.parse_body(args.body)
    I = approx.ell_interval(B, args.eps)
    rep = from_min_report("approx", {"body": args.body, "descriptor": B.descriptor, "eps": num(args.eps)},
                          I.report)
    rep.interval = {"lower": num(I.lower), "upper": num(I.upper), "epsilon": num(I.epsilon),
                    "achieved": num(I.achieved), "vertices": int(I.polygon.m), "center": pts(I.center)[0]}
    return rep


def cmd_oracle(args) -> Report:
    P = parse_table(args.table)
    R = oracle.brute_force_min(P, args.samples, refine=not args.no_refine)
    alg = orbits.shortest_orbits(P)
    inp = _polygon_input(args.table, P)
    inp["samples"] = int(args.samples)
    rep = from_min_report("oracle", inp, R)
    rep.oracle = {"samples": int(args.samples), "refine": not args.no_refine, "ell": num(R.ell),
                  "algorithm_ell": num(alg.ell), "delta": num(R.ell - alg.ell)}
    return rep


def cmd_minkowski(args) -> Report:
    P = parse_table(args.table)
    K = minkowski.parse_gauge(args.gauge)
    inp = _polygon_input(args.table, P)
    inp["gauge"] = K.descriptor
    return from_min_report("minkowski", inp, minkowski.minkowski_shortest(P, K))


def _summary(rep: Report) -> list[str]:
    lines = []
    if rep.command == "capacity":
        lines.append(f"c_EHZ = {rep.capacity!r}")
        return lines
    lines.append(f"ell = {rep.ell!r}")
    if rep.classification:
        lines.append(f"classification = {rep.classification}")
    if rep.width is not None:
        lines.append(f"width = {rep.width!r}")
        lines.append(f"inradius = {rep.inradius!r}")
    lines.append(f"minimizers = {len(rep.minimizers)}")
    if rep.interval:
        lines.append(f"interval = [{rep.interval['lower']!r}, {rep.interval['upper']!r}]")
        lines.append(f"polygon vertices = {rep.interval['vertices']}")
    if rep.oracle:
        lines.append(f"algorithm ell = {rep.oracle['algorithm_ell']!r}")
        lines.append(f"delta = {rep.oracle['delta']!r}")
    return lines


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="convex-billiards",
                                     description="Shortest closed billiard orbits on convex tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, table=True):
        p = sub.add_parser(name, help=help_text)
        if table:
            p.add_argument("table", help=TABLE_HELP)
        p.add_argument("--json", metavar="PATH", help="write the report as JSON")
        p.add_argument("--svg", metavar="PATH", help="write an SVG drawing")
        p.add_argument("--timing", action="store_true", help="record wall-clock time in the report")
        p.set_defaults(func=fn)
        return p

    add("min", cmd_min, "shortest orbits of a polygon").add_argument(
        "--full", action="store_true", help="also enumerate vertex-vertex orbits")
    add("capacity", cmd_capacity, "EHZ capacity of the table times the unit disc")
    p = add("approx", cmd_approx, "certified bracket for a non-polygonal table", table=False)
    p.add_argument("body", help="disc:R, ellipse:a,b or polygon:@file.json")
    p.add_argument("--eps", type=float, required=True, help="relative accuracy")
    p = add("oracle", cmd_oracle, "brute-force verification")
    p.add_argument("--samples", type=int, default=720, help="boundary samples (default 720)")
    p.add_argument("--no-refine", action="store_true", help="skip coordinate-descent polish")
    p = add("minkowski", cmd_minkowski, "shortest orbits for a gauge")
    p.add_argument("--gauge", default="disc", help="disc, lp:p or ellipse:a,b")
    return parser


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        t0 = time.perf_counter()
        rep = args.func(args)
        if args.timing:
            rep.timing = num(time.perf_counter() - t0)
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(rep.to_json())
        if args.svg:
            with open(args.svg, "w") as fh:
                fh.write(render_svg(rep))
    except ConvergenceError as exc:
        print(f"error: {exc}", file=stderr)
        return 2
    except (ValidationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {' '.join(str(exc).split())}", file=stderr)
        return 1
    for line in _summary(rep):
        print(line, file=stdout)
    return 0


def main() -> None:
    sys.exit(run())
