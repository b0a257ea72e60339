"""Shortest generalised closed billiard orbits on convex polygons.

Shortest orbits have two bounces or are regular with three bounces, so the
search is finite:

* :func:`two_bounce_orbits` enumerates bands between parallel edges, vertex
  to edge altitudes and (optionally) vertex to vertex segments;
* :func:`three_bounce_orbits` cuts acute triangles out of edge triples and
  keeps those whose Fagnano triangle lies on the polygon;
* :func:`shortest_orbits` selects the minimisers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Union

import numpy as np

from . import geom
from .errors import NotAcute, NotStrictlyShorter, NotThreeBounce
from .geom import TAU_PAR, ConvexPolygon, Line, Triangle, cross

TAU_LEN = 1e-9

__all__ = [
    "TAU_LEN", "Classification", "Orbit", "TwoBounceBand", "MinReport",
    "two_bounce_orbits", "acute_triangle_from_edges", "fagnano", "three_bounce_orbits",
    "shortest_orbits", "classify_min", "perturbation_ratio",
    "reflection_residuals", "orbit_violations", "add_orbit_hook", "remove_orbit_hook",
]


class Classification(str, Enum):
    TWO_BOUNCE_ONLY = "TwoBounceOnly"
    THREE_BOUNCE_ONLY = "ThreeBounceOnly"
    BOTH = "Both"


@dataclass(frozen=True, eq=False)
class Orbit:
    """A closed generalised billiard orbit with two or three bounces.

    ``sites[i]`` locates bounce ``i``: ``("e", k)`` for the open edge ``k``
    and ``("v", k)`` for vertex ``k``.  ``support_lines[i]`` is a line
    through bounce ``i`` disjoint from the open table that witnesses the
    reflection law there (the edge line itself at smooth bounces).
    """

    bounce_points: np.ndarray
    sites: tuple
    support_lines: tuple
    kind: str
    edges: Optional[tuple] = None
    triangle: Optional[Triangle] = None
    length: float = field(init=False)

    def __post_init__(self):
        q = np.array(self.bounce_points, dtype=float)
        q.setflags(write=False)
        object.__setattr__(self, "bounce_points", q)
        object.__setattr__(self, "length", _closed_length(q))

    @property
    def period(self) -> int:
        return len(self.bounce_points)

    @property
    def regular(self) -> tuple:
        return tuple(s[0] == "e" for s in self.sites)

    @property
    def is_regular(self) -> bool:
        return all(self.regular)

    def key(self, digits: int = 9) -> frozenset:
        """Trace identity: same bounce points irrespective of order and orientation."""
        scale = max(1.0, float(np.abs(self.bounce_points).max()))
        return frozenset(tuple(np.round(p / scale, digits)) for p in self.bounce_points)

    def __repr__(self):
        pts = np.round(self.bounce_points, 9).tolist()
        return f"Orbit(kind={self.kind!r}, length={self.length:.12g}, bounce_points={pts})"


def _closed_length(q: np.ndarray) -> float:
    return float(np.linalg.norm(np.roll(q, -1, axis=0) - q, axis=1).sum())


@dataclass(frozen=True, eq=False)
class TwoBounceBand:
    """Continuum of regular 2-bounce orbits between two parallel edges.

    Base points run over the open interval ``interval`` measured in arclength
    along edge ``edges[0]`` from its first vertex; ``direction`` points from
    that edge to ``edges[1]``.  ``representatives`` are the two orbits at the
    closed ends of the interval.
    """

    edges: tuple
    direction: np.ndarray
    interval: tuple
    length: float
    representatives: tuple

    period = 2
    kind = "band"

    def orbit_at(self, P: ConvexPolygon, s: float) -> Orbit:
        i, j = self.edges
        x = P.point_on_edge(i, s)
        return _band_orbit(P, i, j, x, x + 0.5 * self.length * self.direction)

    def contains_segment(self, P: ConvexPolygon, a, b, tol: Optional[float] = None) -> bool:
        """Whether the segment ``ab`` lies in the closure of the band."""
        tol = P.tol if tol is None else tol
        i, j = self.edges
        for p, q in ((a, b), (b, a)):
            if _on_closed_edge(P, i, p, tol) and _on_closed_edge(P, j, q, tol):
                d = np.asarray(q) - np.asarray(p)
                if abs(np.linalg.norm(d) - 0.5 * self.length) <= tol and abs(cross(d, self.direction)) <= tol:
                    return True
        return False

    def __repr__(self):
        s0, s1 = self.interval
        return f"TwoBounceBand(edges={self.edges}, length={self.length:.12g}, interval=({s0:.9g}, {s1:.9g}))"


Minimizer = Union[Orbit, TwoBounceBand]


@dataclass(frozen=True, eq=False)
class MinReport:
    """Shortest orbit length with the set of minimisers.

    ``width`` and ``inradius`` are the Euclidean quantities of ``polygon``;
    ``capacity`` is the EHZ capacity of the product of the table with the
    unit disc, which equals ``ell``.
    """

    polygon: ConvexPolygon
    ell: float
    minimizers: tuple
    width: float
    inradius: float
    classification: Classification
    capacity: float
    three_bounce: tuple = ()
    gauge: Optional[str] = None


# -- post-hoc verification hooks ------------------------------------------------

_HOOKS: list = []


def add_orbit_hook(fn: Callable[[ConvexPolygon, Orbit], None]) -> None:
    """Register ``fn(table, orbit)``, called for every orbit an operation returns."""
    _HOOKS.append(fn)


def remove_orbit_hook(fn) -> None:
    _HOOKS.remove(fn)


def _emit(P: ConvexPolygon, orbits):
    if _HOOKS:
        for c in orbits:
            for fn in _HOOKS:
                fn(P, c)
    return orbits


# -- invariants -----------------------------------------------------------------

def _reflection_vectors(q: np.ndarray) -> np.ndarray:
    prev = np.roll(q, 1, axis=0)
    nxt = np.roll(q, -1, axis=0)
    return geom.unit(q - prev) + geom.unit(q - nxt)


def reflection_residuals(orbit: Orbit) -> np.ndarray:
    """Per bounce, the component of the reflection vector along the support line.

    Zero means the sum of the incoming and outgoing unit directions is
    orthogonal to the witnessing line.
    """
    nu = _reflection_vectors(orbit.bounce_points)
    t = np.array([L.direction for L in orbit.support_lines])
    return np.abs(np.einsum("ij,ij->i", nu, t))


def orbit_violations(P: ConvexPolygon, orbit: Orbit, tol: Optional[float] = None) -> list:
    """Empty list iff ``orbit`` is a closed generalised billiard orbit on ``P``."""
    tol = P.tol if tol is None else tol
    out = []
    q = orbit.bounce_points
    for i, p in enumerate(q):
        if not P.on_boundary(p, tol):
            out.append(f"bounce {i} is not on the boundary")
    nu = _reflection_vectors(q)
    for i, (p, v) in enumerate(zip(q, nu)):
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            out.append(f"bounce {i}: degenerate reflection vector")
            continue
        line = Line.with_direction(p, geom.perp(v))
        if not geom.is_disjoint_from_interior(P, line):
            out.append(f"bounce {i}: line orthogonal to the reflection vector meets the interior")
        elif np.max((P.vertices - p) @ (v / nv)) > tol:
            out.append(f"bounce {i}: reflection vector points inwards")
    if abs(orbit.length - _closed_length(q)) > TAU_LEN * max(1.0, orbit.length):
        out.append("stored length does not match the bounce points")
    return out


# -- 2-bounce orbits --------------------------------------------------------------

def _on_closed_edge(P: ConvexPolygon, i: int, p, tol: float) -> bool:
    a = P.vertices[i]
    s = float(np.dot(np.asarray(p) - a, P.tangents[i]))
    off = float(np.dot(P.normals[i], p) - P.offsets[i])
    return abs(off) <= tol and -tol <= s <= P.edge_lengths[i] + tol


def _site(P: ConvexPolygon, i: int, s: float) -> tuple:
    """Site of the point at arclength ``s`` on closed edge ``i``."""
    if s <= P.tol:
        return ("v", i), P.vertices[i]
    if s >= P.edge_lengths[i] - P.tol:
        k = (i + 1) % P.m
        return ("v", k), P.vertices[k]
    return ("e", i), P.point_on_edge(i, s)


def _support_line(P: ConvexPolygon, site: tuple, point, fallback_direction) -> Line:
    if site[0] == "e":
        return P.edge_line(site[1])
    return Line.with_direction(point, fallback_direction)


def _band_orbit(P: ConvexPolygon, i: int, j: int, x, y) -> Orbit:
    si, x = _site(P, i, float(np.dot(x - P.vertices[i], P.tangents[i])))
    sj, y = _site(P, j, float(np.dot(y - P.vertices[j], P.tangents[j])))
    t = P.tangents[i]
    return Orbit(np.array([x, y]), (si, sj),
                 (_support_line(P, si, x, t), _support_line(P, sj, y, t)), kind="band")


def _bands(P: ConvexPolygon) -> list:
    n, t, L, V, m = P.normals, P.tangents, P.edge_lengths, P.vertices, P.m
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            if abs(cross(n[i], n[j])) > TAU_PAR or np.dot(n[i], n[j]) > 0:
                continue
            h = P.offsets[i] + P.offsets[j]
            c = float(np.dot(V[i] - h * n[i] - V[j], t[j]))
            s0, s1 = max(0.0, c - L[j]), min(L[i], c)
            if s1 - s0 <= P.tol:
                continue
            direction = -n[i]
            reps = tuple(_band_orbit(P, i, j, V[i] + s * t[i], V[i] + s * t[i] + h * direction)
                         for s in (s0, s1))
            out.append(TwoBounceBand((i, j), direction, (s0, s1), 2.0 * h, reps))
    return out


def _vertex_edge_orbits(P: ConvexPolygon) -> list:
    V, t, n, L, m = P.vertices, P.tangents, P.normals, P.edge_lengths, P.m
    k, e = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    s = np.einsum("kei,kei->ke", V[k] - V[e], t[e])
    ok = (k != e) & (k != (e + 1) % m) & (s >= -P.tol) & (s <= L[e] + P.tol)
    ok &= P.in_normal_cone(k, -n[e])
    out = []
    for kk, ee in zip(*np.nonzero(ok)):
        foot_site, foot = _site(P, ee, float(s[kk, ee]))
        vk = V[kk]
        kind = "vertex-edge" if foot_site[0] == "e" else "vertex-vertex"
        lines = (Line(vk, t[ee]), P.edge_line(ee))
        out.append(Orbit(np.array([vk, foot]), (("v", int(kk)), foot_site), lines, kind=kind))
    return out


def _vertex_vertex_orbits(P: ConvexPolygon) -> list:
    V, m = P.vertices, P.m
    a, b = np.triu_indices(m, 1)
    u = V[a] - V[b]
    ok = P.in_normal_cone(a, u) & P.in_normal_cone(b, -u)
    out = []
    for i, j in zip(a[ok], b[ok]):
        d = geom.perp(V[i] - V[j])
        lines = (Line.with_direction(V[i], d), Line.with_direction(V[j], d))
        out.append(Orbit(np.array([V[i], V[j]]), (("v", int(i)), ("v", int(j))), lines,
                         kind="vertex-vertex"))
    return out


def _dedupe(orbits, bands=(), P: Optional[ConvexPolygon] = None) -> list:
    seen = set()
    out = []
    for c in orbits:
        key = c.key()
        if key in seen:
            continue
        if c.period == 2 and any(B.contains_segment(P, *c.bounce_points) for B in bands):
            continue
        seen.add(key)
        out.append(c)
    return out


def two_bounce_orbits(P: ConvexPolygon, full: bool = False) -> tuple[list, list]:
    """Generalised 2-bounce orbits: ``(bands, orbits)``.

    Bands come from pairs of parallel edges.  Orbits are vertex to edge
    altitudes whose foot lies on the closed edge and whose orthogonal line at
    the vertex supports the polygon; a foot landing on a vertex yields a
    vertex-vertex orbit.  With ``full`` every vertex-vertex orbit is added,
    which is never needed for the minimal length.  Orbits in the closure of a
    band are represented by the band.
    """
    bands = _bands(P)
    orbits = _vertex_edge_orbits(P)
    if full:
        orbits += _vertex_vertex_orbits(P)
    orbits = _dedupe(orbits, bands, P)
    _emit(P, orbits)
    for B in bands:
        _emit(P, B.representatives)
    return bands, orbits


# -- 3-bounce orbits ---------------------------------------------------------------

def acute_triangle_from_edges(P: ConvexPolygon, i: int, j: int, k: int) -> Optional[Triangle]:
    """The acute triangle cut out by the lines of edges ``i, j, k``, if any.

    Returns ``None`` when two of the lines are parallel, when the triangle
    does not contain ``P`` or when it is not strictly acute.
    """
    if len({i % P.m, j % P.m, k % P.m}) != 3:
        raise ValueError("edge indices must be distinct")
    lines = [P.edge_line(e) for e in (i, j, k)]
    corners = []
    for a, b in ((0, 1), (1, 2), (2, 0)):
        x = geom.line_intersection(lines[a], lines[b])
        if x is None:
            return None
        corners.append(x)
    corners = np.array(corners)
    scale = P.diameter
    if abs(cross(corners[1] - corners[0], corners[2] - corners[0])) <= geom.TAU_AREA * scale**2:
        return None
    D = Triangle(corners)
    slack = P.vertices @ D.normals.T - D.offsets
    if np.any(slack > P.tol):
        return None
    if not D.is_acute:
        return None
    return D


def fagnano(D: Triangle) -> Orbit:
    """The Fagnano orbit through the feet of the three altitudes of ``D``.

    Bounce ``e`` lies on edge ``e`` of ``D``.  Raises :class:`NotAcute` for
    rectangular and obtuse triangles, which carry no regular 3-bounce orbit.
    """
    if not isinstance(D, Triangle):
        D = Triangle(D.vertices if isinstance(D, ConvexPolygon) else D)
    if not D.is_acute:
        raise NotAcute(f"triangle is {D.kind}; the Fagnano orbit needs an acute triangle")
    feet = np.array([D.altitude_foot((e + 2) % 3) for e in range(3)])
    c = Orbit(feet, tuple(("e", e) for e in range(3)), tuple(D.edge_line(e) for e in range(3)),
              kind="fagnano", edges=(0, 1, 2), triangle=D)
    _emit(D, [c])
    return c


def _candidate_triples(P: ConvexPolygon) -> np.ndarray:
    """Edge triples whose lines bound an acute triangle, via normal-angle gaps.

    The triangle cut out by three edge lines has the angle ``pi - g`` between
    consecutive normals separated by ``g``; it is bounded iff every gap is
    below ``pi`` and acute iff every gap exceeds ``pi / 2``.
    """
    m = P.m
    phi = np.mod(P.normal_angles - P.normal_angles[0], 2 * math.pi)
    lo, hi = math.pi / 2 + TAU_PAR, math.pi - TAU_PAR
    tw = 2 * math.pi
    out = []
    for i in range(m - 2):
        j0 = np.searchsorted(phi, phi[i] + lo, side="right")
        j1 = np.searchsorted(phi, phi[i] + hi, side="left")
        k0 = np.searchsorted(phi, phi[i] + tw - hi, side="right")
        k1 = np.searchsorted(phi, phi[i] + tw - lo, side="left")
        if j0 >= j1 or k0 >= k1:
            continue
        J = np.arange(j0, j1)
        K = np.arange(k0, k1)
        g = phi[K][None, :] - phi[J][:, None]
        jj, kk = np.nonzero((g > lo) & (g < hi))
        if len(jj):
            out.append(np.stack([np.full(len(jj), i), J[jj], K[kk]], axis=1))
    if not out:
        return np.empty((0, 3), dtype=int)
    return np.concatenate(out)


def _fagnano_in_polygon(P: ConvexPolygon, triples: np.ndarray):
    V, t, L = P.vertices, P.tangents, P.edge_lengths

    def meet(a, b):
        s = cross(V[b] - V[a], t[b]) / cross(t[a], t[b])
        return V[a] + s[:, None] * t[a]

    def foot(x, e):
        s = np.einsum("ij,ij->i", x - V[e], t[e])
        return s, V[e] + s[:, None] * t[e]

    i, j, k = triples.T
    X_ij, X_jk, X_ki = meet(i, j), meet(j, k), meet(k, i)
    si, Fi = foot(X_jk, i)
    sj, Fj = foot(X_ki, j)
    sk, Fk = foot(X_ij, k)
    tol = P.tol
    ok = np.ones(len(triples), dtype=bool)
    for s, e in ((si, i), (sj, j), (sk, k)):
        ok &= (s > tol) & (s < L[e] - tol)
    return ok, np.stack([Fi, Fj, Fk], axis=1), np.stack([X_ki, X_ij, X_jk], axis=1)


def three_bounce_orbits(P: ConvexPolygon) -> list:
    """All regular 3-bounce orbits on ``P``.

    Each is the Fagnano orbit of an acute triangle cut out by three edge
    lines, kept when every triangle vertex projects onto the opposite open
    edge of ``P``.  At most one orbit per edge triple.
    """
    triples = _candidate_triples(P)
    if len(triples) == 0:
        return []
    ok, feet, corners = _fagnano_in_polygon(P, triples)
    out = []
    for (i, j, k), q, X in zip(triples[ok], feet[ok], corners[ok]):
        edges = (int(i), int(j), int(k))
        out.append(Orbit(q, tuple(("e", e) for e in edges), tuple(P.edge_line(e) for e in edges),
                         kind="fagnano", edges=edges, triangle=Triangle(X)))
    return _emit(P, out)


# -- minimisers ----------------------------------------------------------------------

def _classify(minimizers) -> Classification:
    periods = {c.period for c in minimizers}
    if periods == {2}:
        return Classification.TWO_BOUNCE_ONLY
    if periods == {3}:
        return Classification.THREE_BOUNCE_ONLY
    return Classification.BOTH


def select_minimizers(candidates, tol: float = TAU_LEN):
    ell = min(c.length for c in candidates)
    return ell, tuple(c for c in candidates if c.length <= ell * (1 + tol))


def shortest_orbits(P: ConvexPolygon, full: bool = False) -> MinReport:
    """Length ``ell`` of the shortest closed orbits and all minimisers."""
    bands, two = two_bounce_orbits(P, full=full)
    three = three_bounce_orbits(P)
    ell, mins = select_minimizers(list(bands) + list(two) + list(three))
    r, _ = geom.inradius(P)
    return MinReport(polygon=P, ell=ell, minimizers=mins, width=geom.width(P), inradius=r,
                     classification=_classify(mins), capacity=ell, three_bounce=tuple(three))


def classify_min(report: MinReport) -> Classification:
    return _classify(report.minimizers)


def perturbation_ratio(P: ConvexPolygon, c: Orbit) -> float:
    """``2 width(P) / length(c)`` for a 3-bounce orbit shorter than ``2 width(P)``.

    Any convex table squeezed between homothets ``r1 P`` and ``r2 P`` with
    ``r2 / r1`` below this ratio has only regular 3-bounce minimisers.
    """
    if getattr(c, "period", None) != 3:
        raise NotThreeBounce("perturbation ratio needs a 3-bounce orbit")
    w2 = 2.0 * geom.width(P)
    if c.length >= w2 * (1 - TAU_LEN):
        raise NotStrictlyShorter(f"orbit length {c.length:.12g} is not below 2*width = {w2:.12g}")
    return w2 / c.length
