"""SVG 1.1 drawings of reports.

Output depends only on the report, with coordinates printed at fixed
precision, so equal reports give byte-identical files.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .report import Report

SIZE = 480
PAD = 0.06
STYLE = {
    "table": 'fill="#f4f1ea" stroke="#222" stroke-width="1.5"',
    "band": 'fill="#4a7fb5" fill-opacity="0.25" stroke="#4a7fb5" stroke-width="0.6"',
    "two": 'fill="none" stroke="#c0392b" stroke-width="1.6"',
    "three": 'fill="none" stroke="#1e8449" stroke-width="1.6"',
    "config": 'fill="none" stroke="#7d3c98" stroke-width="1.2" stroke-dasharray="2,2"',
    "construction": 'fill="none" stroke="#888" stroke-width="0.8" stroke-dasharray="5,3"',
    "point": 'fill="#222"',
}


class _Frame:
    """Maps table coordinates to the picture, y axis pointing up."""

    def __init__(self, points: np.ndarray):
        lo, hi = points.min(axis=0), points.max(axis=0)
        span = float(max(hi - lo)) or 1.0
        self.scale = SIZE * (1 - 2 * PAD) / span
        self.lo, self.hi = lo, hi
        self.off = np.array([SIZE * PAD, SIZE * PAD]) + 0.5 * (SIZE * (1 - 2 * PAD) - self.scale * (hi - lo))

    def xy(self, p) -> str:
        x = self.off[0] + self.scale * (p[0] - self.lo[0])
        y = SIZE - (self.off[1] + self.scale * (p[1] - self.lo[1]))
        return f"{x:.4f},{y:.4f}"

    def path(self, pts, closed: bool = True) -> str:
        body = " L ".join(self.xy(p) for p in pts)
        return f"M {body}{' Z' if closed else ''}"


def _extent(report: Report) -> np.ndarray:
    pts = [np.asarray(report.polygon, dtype=float)]
    for m in report.minimizers:
        if "triangle" in m:
            pts.append(np.asarray(m["triangle"], dtype=float))
    return np.vstack(pts)


def render_svg(report: Report) -> str:
    """Table, minimisers and Fagnano construction lines as an SVG document.

    Bands are shaded strips, 2-bounce orbits red segments, 3-bounce orbits
    green triangles; for a 3-bounce minimiser with its enclosing triangle the
    triangle sides and altitudes are dashed.
    """
    if report.polygon is None:
        raise ValueError("the report has no polygon to draw")
    F = _Frame(_extent(report))
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{escape(report.command)}: ell = {report.ell!r}</title>",
        f'<path class="table" d="{F.path(report.polygon)}" {STYLE["table"]}/>',
    ]
    for m in report.minimizers:
        if m["type"] == "band":
            out.append(f'<path class="band" d="{F.path(m["strip"])}" {STYLE["band"]}/>')
    for m in report.minimizers:
        if m["type"] == "orbit" and m["period"] == 3 and "triangle" in m:
            tri = m["triangle"]
            out.append(f'<path class="construction" d="{F.path(tri)}" {STYLE["construction"]}/>')
            # altitude from each corner to the opposite foot
            for k, foot in enumerate(m["bounce_points"]):
                corner = tri[(k + 2) % 3]
                out.append(f'<path class="construction" d="{F.path([corner, foot], closed=False)}" '
                           f'{STYLE["construction"]}/>')
    for m in report.minimizers:
        if m["type"] == "band":
            continue
        q = m["bounce_points"] if m["type"] == "orbit" else m["points"]
        style = STYLE["config"] if m["type"] == "config" else STYLE["two" if m["period"] == 2 else "three"]
        out.append(f'<path class="{m["type"]}" d="{F.path(q, closed=m["period"] == 3)}" {style}/>')
        for p in q:
            x, y = F.xy(p).split(",")
            out.append(f'<circle cx="{x}" cy="{y}" r="2.5" {STYLE["point"]}/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
