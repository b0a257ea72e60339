"""Command line: examples, exit codes, reports and drawings."""

from __future__ import annotations

import io
import json
import math
import subprocess
import sys
import xml.etree.ElementTree as ET

import jsonschema
import numpy as np
import pytest

from convex_billiards import geom
from convex_billiards.cli import parse_table, run
from convex_billiards.errors import ValidationError
from convex_billiards.report import Report, minimizer_length, schema
from convex_billiards.svg import render_svg

SVG = "{http://www.w3.org/2000/svg}"


def cli(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def value(text, key):
    for line in text.splitlines():
        if line.startswith(key + " = "):
            return float(line.split(" = ", 1)[1])
    raise KeyError(key)


@pytest.fixture
def pentagon_file(tmp_path):
    f = tmp_path / "pentagon.json"
    f.write_text(json.dumps({"vertices": geom.regular_polygon(5).vertices.tolist()}))
    return f


def report_of(tmp_path, *argv):
    path = tmp_path / "r.json"
    code, out, err = cli(*argv, "--json", str(path))
    assert code == 0, err
    return Report.from_json(path.read_text()), path.read_text()


class TestExamples:
    def test_min_pentagon(self, pentagon_file):
        code, out, _ = cli("min", str(pentagon_file))
        assert code == 0
        assert value(out, "ell") == pytest.approx(3.6180340, abs=1e-7)
        assert "classification = TwoBounceOnly" in out

    def test_capacity_pentagon(self):
        code, out, _ = cli("capacity", "ngon:5@unit-circle")
        assert code == 0
        assert value(out, "c_EHZ") == pytest.approx(2 * (1 + math.cos(math.pi / 5)), abs=1e-9)

    def test_approx_disc(self, tmp_path):
        rep, _ = report_of(tmp_path, "approx", "disc:1", "--eps", "0.001")
        lo, hi = rep.interval["lower"], rep.interval["upper"]
        assert lo <= 4.0 <= hi
        assert hi == pytest.approx(1.001 * lo, rel=1e-11)

    def test_oracle_delta(self, tmp_path):
        rep, _ = report_of(tmp_path, "oracle", "ngon:5@unit-circle", "--samples", "360")
        assert abs(rep.oracle["delta"]) <= 1e-3
        assert rep.oracle["algorithm_ell"] == pytest.approx(2 * (1 + math.cos(math.pi / 5)), abs=1e-9)

    def test_minkowski_square(self, tmp_path):
        (tmp_path / "sq.json").write_text('{"vertices": [[0, 0], [1, 0], [1, 1], [0, 1]]}')
        code, out, _ = cli("minkowski", str(tmp_path / "sq.json"), "--gauge", "lp:4")
        assert code == 0 and value(out, "ell") == pytest.approx(2.0, abs=1e-9)

    def test_shorthands(self):
        assert np.allclose(parse_table("ngon:6@side=2").edge_lengths, 2.0)
        assert parse_table("triangle:0,0,1,0,0,1").m == 3
        for bad in ("ngon:x@unit-circle", "ngon:5@side=abc", "ngon:5@side=inf", "triangle:0,0,1,0"):
            with pytest.raises(ValidationError):
                parse_table(bad)

    def test_module_entry_point(self):
        r = subprocess.run([sys.executable, "-m", "convex_billiards", "capacity", "ngon:4@unit-circle"],
                           capture_output=True, text=True, check=False)
        assert r.returncode == 0
        assert value(r.stdout, "c_EHZ") == pytest.approx(4 * math.cos(math.pi / 4), abs=1e-9)


class TestExitCodes:
    @pytest.mark.parametrize("argv", [
        ("min", "ngon:2@unit-circle"),
        ("min", "triangle:0,0,1,1,2,2"),
        ("min", "missing.json"),
        ("approx", "disc:-1", "--eps", "0.01"),
        ("approx", "disc:1", "--eps", "0"),
        ("minkowski", "ngon:4@unit-circle", "--gauge", "lp:1"),
        ("oracle", "ngon:4@unit-circle", "--samples", "4"),
        ("nonsense",),
        ("min",),
    ])
    def test_invalid_input(self, argv):
        code, out, err = cli(*argv)
        assert code == 1
        assert out == ""
        if err:
            assert len(err.strip().splitlines()) == 1 and err.startswith("error:")

    def test_bad_json(self, tmp_path):
        f = tmp_path / "bad.json"
        f.write_text("{not json")
        code, _, err = cli("min", str(f))
        assert code == 1 and err.count("\n") == 1

    def test_reflex_polygon(self, tmp_path):
        f = tmp_path / "reflex.json"
        f.write_text('{"vertices": [[0, 0], [2, 0], [1, 0.5], [2, 2], [0, 2]]}')
        assert cli("min", str(f))[0] == 1

    def test_non_convergence(self, monkeypatch):
        from convex_billiards import approx
        from convex_billiards.errors import CertificationFailed

        def fail(*a, **k):
            raise CertificationFailed("direction budget exhausted")

        monkeypatch.setattr(approx, "ell_interval", fail)
        code, _, err = cli("approx", "disc:1", "--eps", "0.01")
        assert code == 2 and err.startswith("error:")

    def test_help(self):
        assert cli("--help")[0] == 0


class TestReports:
    @pytest.mark.parametrize("argv", [
        ("min", "ngon:6@unit-circle"),
        ("min", "ngon:4@unit-circle", "--full"),
        ("capacity", "triangle:0,0,1,0,0.3,0.8"),
        ("approx", "ellipse:2,1", "--eps", "0.01"),
        ("oracle", "ngon:3@unit-circle", "--samples", "120"),
        ("minkowski", "triangle:0,0,1,0,0.5,0.9", "--gauge", "lp:3"),
    ])
    def test_schema_and_round_trip(self, tmp_path, argv):
        rep, text = report_of(tmp_path, *argv)
        jsonschema.validate(json.loads(text), schema())
        assert Report.from_json(rep.to_json()) == rep
        assert rep.to_json() == text
        assert rep.tolerances["tau_len"] == 1e-9

    @pytest.mark.parametrize("table", ["ngon:5@unit-circle", "ngon:3@unit-circle", "ngon:8@unit-circle",
                                       "triangle:0,0,4,0,1,1"])
    def test_ell_matches_minimizers(self, tmp_path, table):
        rep, _ = report_of(tmp_path, "min", table)
        assert rep.minimizers
        for m in rep.minimizers:
            assert abs(minimizer_length(m) - rep.ell) <= 1e-9 * max(1.0, rep.ell)

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for d in (a, b):
            d.mkdir()
            assert cli("min", "ngon:9@unit-circle", "--json", str(d / "r.json"), "--svg", str(d / "r.svg"))[0] == 0
        assert (a / "r.json").read_bytes() == (b / "r.json").read_bytes()
        assert (a / "r.svg").read_bytes() == (b / "r.svg").read_bytes()

    def test_timing_is_optional(self, tmp_path):
        rep, _ = report_of(tmp_path, "min", "ngon:4@unit-circle")
        assert rep.timing is None
        rep, _ = report_of(tmp_path, "min", "ngon:4@unit-circle", "--timing")
        assert rep.timing >= 0

    def test_unknown_fields_rejected(self):
        with pytest.raises(ValueError):
            Report.from_dict({"command": "min", "input": {}, "polygon": None, "ell": 1.0, "extra": 1})


def drawing(tmp_path, *argv):
    path = tmp_path / "d.svg"
    assert cli(*argv, "--svg", str(path))[0] == 0
    root = ET.fromstring(path.read_text())
    assert root.tag == SVG + "svg" and root.get("version") == "1.1"
    return root, [(p.get("class"), p.get("d")) for p in root.iter(SVG + "path")]


def coords(d):
    return np.array([[float(v) for v in t.split(",")] for t in d.replace("M", " ").replace("L", " ")
                     .replace("Z", " ").split()])


class TestSvg:
    def test_equilateral(self, tmp_path):
        _, paths = drawing(tmp_path, "min", "triangle:0,0,1,0,0.5,0.8660254037844386")
        table = coords(next(d for c, d in paths if c == "table"))
        (orbit,) = [coords(d) for c, d in paths if c == "orbit"]
        mids = 0.5 * (table + np.roll(table, -1, axis=0))
        # the orbit is the midpoint triangle, to drawing precision
        assert np.max(np.min(np.linalg.norm(orbit[:, None] - mids[None], axis=2), axis=1)) < 1e-3
        assert any(c == "construction" for c, _ in paths)

    def test_hexagon_bands(self, tmp_path):
        _, paths = drawing(tmp_path, "min", "ngon:6@unit-circle")
        assert sum(c == "band" for c, _ in paths) == 3
        assert not any(c == "construction" for c, _ in paths)

    def test_pentagon_segments(self, tmp_path):
        _, paths = drawing(tmp_path, "min", "ngon:5@unit-circle")
        segs = [coords(d) for c, d in paths if c == "orbit"]
        assert len(segs) == 5 and all(len(s) == 2 for s in segs)
        table = coords(next(d for c, d in paths if c == "table"))
        # each segment starts at a corner of the table
        for s in segs:
            assert np.min(np.linalg.norm(table - s[0], axis=1)) < 1e-3

    def test_render_is_pure(self, tmp_path):
        rep, _ = report_of(tmp_path, "min", "ngon:7@unit-circle")
        assert render_svg(rep) == render_svg(Report.from_json(rep.to_json()))
