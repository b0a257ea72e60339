"""Machine-readable run reports.

A :class:`Report` holds only plain Python data (floats, ints, strings, lists
and dicts), rounded to 12 significant digits when built from engine results,
so that ``Report -> JSON -> Report`` is lossless and output is byte-stable.
The layout is described by ``report.schema.json`` next to this module.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from typing import Any, Optional

import numpy as np

from .geom import TAU_AREA, TAU_PAR, TAU_SIDE, TAU_UNIT
from .minkowski import TAU_REFL
from .orbits import TAU_LEN, MinReport, TwoBounceBand

SCHEMA_VERSION = 1
DIGITS = 12

TOLERANCES = {
    "tau_par": TAU_PAR, "tau_side": TAU_SIDE, "tau_unit": TAU_UNIT,
    "tau_area": TAU_AREA, "tau_len": TAU_LEN, "tau_refl": TAU_REFL,
}


def num(x) -> float:
    """Round to ``DIGITS`` significant digits; ``-0.0`` becomes ``0.0``."""
    x = float(f"{float(x):.{DIGITS}g}")
    return x + 0.0


def pts(a) -> list:
    return [[num(x), num(y)] for x, y in np.asarray(a, dtype=float).reshape(-1, 2)]


@dataclass
class Report:
    command: str
    input: dict
    polygon: Optional[list]
    ell: float
    width: Optional[float] = None
    inradius: Optional[float] = None
    capacity: Optional[float] = None
    classification: Optional[str] = None
    minimizers: list = field(default_factory=list)
    three_bounce: list = field(default_factory=list)
    interval: Optional[dict] = None
    oracle: Optional[dict] = None
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    timing: Optional[float] = None
    version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))


def schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("report.schema.json").read_text())


def _band(P, B: TwoBounceBand) -> dict:
    i, j = B.edges
    s0, s1 = B.interval
    x0, x1 = P.point_on_edge(i, s0), P.point_on_edge(i, s1)
    off = getattr(B, "offset", None)
    off = 0.5 * B.length * B.direction if off is None else off
    out = {
        "type": "band", "period": 2, "edges": [int(i), int(j)],
        "interval": [num(s0), num(s1)], "length": num(B.length),
        "direction": pts(B.direction)[0],
        "strip": pts([x0, x1, x1 + off, x0 + off]),
    }
    if hasattr(B, "k_length"):
        out["k_length"] = num(B.k_length)
    return out


def _orbit(c) -> dict:
    out = {
        "type": "orbit", "kind": c.kind, "period": int(c.period),
        "bounce_points": pts(c.bounce_points), "length": num(c.length),
        "regular": [bool(r) for r in c.regular],
        "sites": [[s[0], int(s[1])] for s in c.sites],
    }
    if getattr(c, "triangle", None) is not None:
        out["triangle"] = pts(c.triangle.vertices)
    if hasattr(c, "k_length"):
        out["k_length"] = num(c.k_length)
        out["residuals"] = [num(r) for r in c.residuals]
    return out


def _config(C) -> dict:
    return {
        "type": "config", "period": int(C.period), "edges": [int(e) for e in C.edges],
        "params": [num(s) for s in C.params], "points": pts(C.points), "length": num(C.length),
    }


def encode(P, c) -> dict:
    if isinstance(c, TwoBounceBand):
        return _band(P, c)
    if hasattr(c, "params"):
        return _config(c)
    return _orbit(c)


def from_min_report(command: str, inp: dict, R: MinReport, **extra: Any) -> Report:
    P = R.polygon
    return Report(
        command=command, input=inp, polygon=pts(P.vertices), ell=num(R.ell),
        width=num(R.width), inradius=num(R.inradius), capacity=num(R.capacity),
        classification=R.classification.value,
        minimizers=[encode(P, c) for c in R.minimizers],
        three_bounce=[encode(P, c) for c in R.three_bounce], **extra)


def minimizer_length(m: dict) -> float:
    """The length a minimiser entry contributes to ``ell``."""
    return m.get("k_length", m["length"])
