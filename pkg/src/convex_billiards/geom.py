"""Planar convex-geometry kernel.

Points and vectors are float arrays of shape ``(2,)``; anything array-like with
two coordinates is accepted on input.  Every tolerance is relative to the
diameter of the polygon at hand, so all predicates are scale invariant.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import Degenerate, NonConvex, TooFewVertices, ValidationError

TAU_PAR = 1e-9
TAU_SIDE = 1e-9
TAU_UNIT = 1e-9
TAU_AREA = 1e-12

__all__ = [
    "TAU_PAR", "TAU_SIDE", "TAU_UNIT", "TAU_AREA",
    "as_point", "cross", "perp", "unit",
    "Line", "ConvexPolygon", "Triangle",
    "validate_polygon", "width", "width_pairs", "inradius", "diameter",
    "line_intersection", "is_disjoint_from_interior", "foot_of_perpendicular",
    "regular_polygon", "random_convex_polygon", "random_symmetric_polygon",
    "read_polygon_json",
]


def as_point(p) -> np.ndarray:
    a = np.asarray(p, dtype=float).reshape(-1)
    if a.shape != (2,) or not np.all(np.isfinite(a)):
        raise ValidationError(f"expected two finite coordinates, got {p!r}")
    return a


def cross(a, b):
    """z-component of the planar cross product; broadcasts over leading axes."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def perp(v) -> np.ndarray:
    """Rotate by +90 degrees."""
    v = np.asarray(v, dtype=float)
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


@dataclass(frozen=True, eq=False)
class Line:
    """Oriented line ``point + t * direction`` with a unit direction."""

    point: np.ndarray
    direction: np.ndarray

    def __post_init__(self):
        p = as_point(self.point)
        d = as_point(self.direction)
        if abs(np.linalg.norm(d) - 1.0) > TAU_UNIT:
            raise ValidationError("line direction must be a unit vector")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "direction", d)

    @classmethod
    def with_direction(cls, point, direction) -> "Line":
        d = as_point(direction)
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValidationError("zero direction vector")
        return cls(point, d / n)

    @classmethod
    def through(cls, a, b) -> "Line":
        a = as_point(a)
        return cls.with_direction(a, as_point(b) - a)

    def at(self, t):
        return self.point + np.multiply.outer(t, self.direction)

    def param(self, p) -> float:
        return float(np.dot(as_point(p) - self.point, self.direction))

    def __repr__(self):
        return f"Line(point={self.point.tolist()}, direction={self.direction.tolist()})"


def _strip_duplicates(pts: np.ndarray, tol: float) -> np.ndarray:
    keep = np.linalg.norm(pts - np.roll(pts, 1, axis=0), axis=1) > tol
    if not keep.any():
        return pts[:1]
    return pts[keep]


def _canonical_vertices(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValidationError("polygon vertices must be a sequence of (x, y) pairs")
    if len(pts) < 3:
        raise TooFewVertices(f"a polygon needs at least 3 vertices, got {len(pts)}")
    if not np.all(np.isfinite(pts)):
        raise ValidationError("polygon vertices must be finite")
    scale = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    if scale == 0.0:
        raise Degenerate("all vertices coincide")
    tol = TAU_SIDE * scale

    pts = _strip_duplicates(pts, tol)
    if len(pts) < 3:
        raise Degenerate("fewer than 3 distinct vertices")
    e_in = pts - np.roll(pts, 1, axis=0)
    e_out = np.roll(pts, -1, axis=0) - pts
    c = cross(e_in, e_out)
    bend = tol * np.maximum(np.linalg.norm(e_in + e_out, axis=1), tol)
    if np.any(c > bend) and np.any(c < -bend):
        raise NonConvex("polygon turns both left and right")
    x, y = pts[:, 0], pts[:, 1]
    area2 = float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
    if abs(area2) <= 2 * TAU_AREA * scale**2:
        raise Degenerate("polygon has zero area")
    if area2 < 0:
        first = pts[0]
        pts = pts[::-1]
        pts = np.roll(pts, -int(np.argmax(np.all(pts == first, axis=1))), axis=0)

    # collapse vertices lying within tol of the chord of their neighbours
    while len(pts) >= 3:
        e_in = pts - np.roll(pts, 1, axis=0)
        e_out = np.roll(pts, -1, axis=0) - pts
        c = cross(e_in, e_out)
        chord = np.linalg.norm(e_in + e_out, axis=1)
        flat = np.abs(c) <= tol * np.maximum(chord, tol)
        if not flat.any():
            break
        if np.any(flat & (np.einsum("ij,ij->i", e_in, e_out) <= 0)):
            raise NonConvex("polygon boundary folds back on itself")
        # drop one vertex at a time so neighbours are re-examined
        pts = np.delete(pts, int(np.argmax(flat)), axis=0)
    if len(pts) < 3:
        raise Degenerate("polygon collapses to a segment")

    e_in = pts - np.roll(pts, 1, axis=0)
    e_out = np.roll(pts, -1, axis=0) - pts
    if np.any(cross(e_in, e_out) <= 0):
        raise NonConvex("polygon has a reflex vertex")
    turning = np.arctan2(cross(e_in, e_out), np.einsum("ij,ij->i", e_in, e_out)).sum()
    if abs(turning - 2 * math.pi) > 1e-6:
        raise NonConvex("polygon boundary winds more than once")
    return pts


class ConvexPolygon:
    """Strictly convex polygon with counterclockwise vertices.

    Edge ``i`` runs from vertex ``i`` to vertex ``i + 1``.  Construction
    validates and canonicalises the input (orientation, duplicate and
    collinear vertices).
    """

    def __init__(self, points):
        v = _canonical_vertices(points)
        v.setflags(write=False)
        self.vertices = v
        self.m = len(v)
        ev = np.roll(v, -1, axis=0) - v
        self.edge_lengths = np.linalg.norm(ev, axis=1)
        self.tangents = ev / self.edge_lengths[:, None]
        # outward normal of a counterclockwise boundary is the tangent turned clockwise
        self.normals = np.stack([self.tangents[:, 1], -self.tangents[:, 0]], axis=1)
        self.offsets = np.einsum("ij,ij->i", self.normals, v)
        self.normal_angles = np.arctan2(self.normals[:, 1], self.normals[:, 0])
        x, y = v[:, 0], v[:, 1]
        self.area = 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        self.perimeter = float(self.edge_lengths.sum())
        self.diameter = _diameter(v)
        for arr in (self.edge_lengths, self.tangents, self.normals, self.offsets, self.normal_angles):
            arr.setflags(write=False)
        if self.area <= TAU_AREA * self.diameter**2:
            raise Degenerate("polygon has zero area")

    def __repr__(self):
        return f"{type(self).__name__}({np.round(self.vertices, 12).tolist()})"

    def __len__(self):
        return self.m

    @property
    def tol(self) -> float:
        """Absolute side tolerance for this polygon."""
        return TAU_SIDE * self.diameter

    @property
    def centroid(self) -> np.ndarray:
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        c = cross(v, w)
        return ((v + w) * c[:, None]).sum(axis=0) / (6.0 * self.area)

    def edge(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        i %= self.m
        return self.vertices[i], self.vertices[(i + 1) % self.m]

    def edge_line(self, i: int) -> Line:
        i %= self.m
        return Line(self.vertices[i], self.tangents[i])

    def point_on_edge(self, i: int, s):
        """Point at arclength ``s`` from the start of edge ``i``."""
        i %= self.m
        return self.vertices[i] + np.multiply.outer(s, self.tangents[i])

    def support(self, u):
        """Support function ``h(u) = max <x, u>``; broadcasts over leading axes of ``u``."""
        return np.max(np.asarray(u, dtype=float) @ self.vertices.T, axis=-1)

    def contains(self, x, tol: Optional[float] = None) -> bool:
        tol = self.tol if tol is None else tol
        return bool(np.all(self.normals @ as_point(x) <= self.offsets + tol))

    def on_boundary(self, x, tol: Optional[float] = None) -> bool:
        tol = self.tol if tol is None else tol
        s = self.normals @ as_point(x) - self.offsets
        return bool(np.all(s <= tol) and np.max(s) >= -tol)

    def in_normal_cone(self, k: int, nu, tol: float = TAU_PAR):
        """Whether ``nu`` is an outward support vector at vertex ``k``.

        The normal cone at a vertex is spanned by the normals of its two
        edges; ``nu`` may be an array of vectors (leading axes broadcast).
        """
        k = np.asarray(k) % self.m
        nu = unit(nu)
        n_prev = self.normals[(k - 1) % self.m]
        n_next = self.normals[k]
        return (cross(n_prev, nu) >= -tol) & (cross(nu, n_next) >= -tol) & (
            np.einsum("...i,...i->...", nu, n_prev + n_next) > 0)

    def scaled(self, r: float, center=None) -> "ConvexPolygon":
        c = np.zeros(2) if center is None else as_point(center)
        return ConvexPolygon(c + r * (self.vertices - c))

    def translated(self, t) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + as_point(t))

    def is_centrally_symmetric(self, tol: Optional[float] = None) -> bool:
        tol = self.tol if tol is None else tol
        if self.m % 2:
            return False
        c = self.vertices.mean(axis=0)
        mirrored = 2 * c - self.vertices
        d = np.linalg.norm(mirrored[:, None, :] - self.vertices[None, :, :], axis=2)
        return bool(np.all(d.min(axis=1) <= tol))


class Triangle(ConvexPolygon):
    """Triangle with its angle classification."""

    def __init__(self, points):
        super().__init__(points)
        if self.m != 3:
            raise ValidationError(f"expected a triangle, got {self.m} vertices")
        v = self.vertices
        a = np.roll(v, 1, axis=0) - v
        b = np.roll(v, -1, axis=0) - v
        self.angles = np.arctan2(cross(b, a), np.einsum("ij,ij->i", a, b))
        self.angles.setflags(write=False)

    @property
    def kind(self) -> str:
        big = float(self.angles.max())
        if big < math.pi / 2 - TAU_PAR:
            return "acute"
        if big > math.pi / 2 + TAU_PAR:
            return "obtuse"
        return "rectangular"

    @property
    def is_acute(self) -> bool:
        return self.kind == "acute"

    def altitude_foot(self, k: int) -> np.ndarray:
        """Foot of the altitude from vertex ``k`` onto the line of the opposite side."""
        return foot_of_perpendicular(self.vertices[k % 3], self.edge_line(k + 1))

    def altitudes(self) -> np.ndarray:
        return np.array([np.linalg.norm(self.vertices[k] - self.altitude_foot(k)) for k in range(3)])


def validate_polygon(points) -> ConvexPolygon:
    """Canonical counterclockwise convex polygon from a vertex list.

    Raises :class:`TooFewVertices`, :class:`Degenerate` or :class:`NonConvex`.
    """
    return ConvexPolygon(points)


def _diameter(v: np.ndarray) -> float:
    m = len(v)
    if m <= 512:
        d = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((d**2).sum(axis=2).max()))
    # rotating calipers over antipodal pairs
    best = 0.0
    j = 1
    for i in range(m):
        i2 = (i + 1) % m
        e = v[i2] - v[i]
        while abs(cross(e, v[(j + 1) % m] - v[i])) > abs(cross(e, v[j] - v[i])):
            j = (j + 1) % m
        best = max(best, np.linalg.norm(v[j] - v[i]), np.linalg.norm(v[j] - v[i2]))
    return float(best)


def diameter(P: ConvexPolygon) -> float:
    return P.diameter


def _edge_depths(P: ConvexPolygon) -> tuple[np.ndarray, np.ndarray]:
    """For each edge, the farthest vertex (rotating calipers) and its distance."""
    v, n, b, m = P.vertices, P.normals, P.offsets, P.m
    depth = lambda i, k: b[i] - n[i] @ v[k % m]  # noqa: E731
    j = int(np.argmax(b[0] - v @ n[0]))
    far = np.empty(m, dtype=int)
    dist = np.empty(m)
    for i in range(m):
        steps = 0
        while steps < m and depth(i, j + 1) > depth(i, j):
            j = (j + 1) % m
            steps += 1
        far[i] = j
        dist[i] = depth(i, j)
    return far, dist


def width(P: ConvexPolygon) -> float:
    """Minimal distance between two parallel support lines."""
    return float(_edge_depths(P)[1].min())


def width_pairs(P: ConvexPolygon) -> list[tuple[int, int]]:
    """All (edge, vertex) pairs realising the width.

    A pair ``(i, k)`` means vertex ``k`` is at distance ``width(P)`` from the
    line of edge ``i``.
    """
    far, dist = _edge_depths(P)
    w = dist.min()
    pairs = []
    for i in np.flatnonzero(dist <= w + P.tol):
        for k in (far[i] - 1, far[i], far[i] + 1):
            k %= P.m
            if k not in (i, (i + 1) % P.m) and P.offsets[i] - P.normals[i] @ P.vertices[k] >= w - P.tol:
                pairs.append((int(i), int(k)))
    return sorted(set(pairs))


def inradius(P: ConvexPolygon) -> tuple[float, np.ndarray]:
    """Radius and centre of the largest inscribed disc (Chebyshev centre).

    Solved as the linear program: maximise ``r`` subject to
    ``<n_i, x> + r <= b_i`` for every edge.
    """
    c0 = P.vertices.mean(axis=0)
    A = np.hstack([P.normals, np.ones((P.m, 1))])
    b = P.offsets - P.normals @ c0
    res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=b,
                  bounds=[(None, None), (None, None), (0, None)], method="highs")
    if res.status != 0:
        raise Degenerate(f"inradius linear program failed: {res.message}")
    return float(res.x[2]), c0 + res.x[:2]


def line_intersection(L1: Line, L2: Line) -> Optional[np.ndarray]:
    """Intersection point, or ``None`` when the lines are parallel."""
    c = float(cross(L1.direction, L2.direction))
    if abs(c) <= TAU_PAR:
        return None
    t = float(cross(L2.point - L1.point, L2.direction)) / c
    return L1.point + t * L1.direction


def is_disjoint_from_interior(P: ConvexPolygon, L: Line) -> bool:
    """True iff all of ``P`` lies weakly on one side of ``L``."""
    s = cross(L.direction, P.vertices - L.point)
    return bool(np.all(s >= -P.tol) or np.all(s <= P.tol))


def foot_of_perpendicular(p, L: Line) -> np.ndarray:
    p = as_point(p)
    return L.point + np.dot(p - L.point, L.direction) * L.direction


def regular_polygon(n: int, circumradius: float = 1.0, side: Optional[float] = None,
                    center=(0.0, 0.0), phase: float = math.pi / 2) -> ConvexPolygon:
    """Regular ``n``-gon with a vertex at angle ``phase``.

    Give either the circumradius or the side length.
    """
    if n < 3:
        raise TooFewVertices("a regular polygon needs n >= 3")
    if side is not None:
        circumradius = side / (2 * math.sin(math.pi / n))
    ang = phase + 2 * math.pi * np.arange(n) / n
    pts = as_point(center) + circumradius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
    return ConvexPolygon(pts)


def random_convex_polygon(rng: np.random.Generator, n: int, unit_diameter: bool = False,
                          min_gap: float = 0.05) -> ConvexPolygon:
    """Random convex ``n``-gon: random points on an ellipse, randomly placed.

    Consecutive angular gaps are at least ``min_gap`` times the uniform gap so
    that no vertex is collapsed as nearly collinear.
    """
    base = 2 * math.pi / n
    while True:
        gaps = rng.exponential(size=n)
        gaps = min_gap * base + (1 - min_gap) * 2 * math.pi * gaps / gaps.sum()
        ang = rng.uniform(0, 2 * math.pi) + np.cumsum(gaps)
        circle = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        rot = rng.uniform(0, 2 * math.pi)
        R = np.array([[math.cos(rot), -math.sin(rot)], [math.sin(rot), math.cos(rot)]])
        S = np.diag([1.0, rng.uniform(0.3, 1.0)])
        pts = circle @ (R @ S).T + rng.uniform(-1, 1, size=2)
        try:
            P = ConvexPolygon(pts)
        except ValidationError:
            continue
        if P.m != n:
            continue
        if unit_diameter:
            P = ConvexPolygon(P.vertices / P.diameter)
        return P


def random_symmetric_polygon(rng: np.random.Generator, k: int) -> ConvexPolygon:
    """Random centrally symmetric ``2k``-gon."""
    while True:
        ang = np.sort(rng.uniform(0, math.pi, size=k))
        if np.min(np.diff(np.concatenate([ang, [ang[0] + math.pi]]))) < 0.02:
            continue
        half = np.stack([np.cos(ang), rng.uniform(0.3, 1.0) * np.sin(ang)], axis=1)
        pts = np.vstack([half, -half]) + rng.uniform(-1, 1, size=2)
        try:
            P = ConvexPolygon(pts)
        except ValidationError:
            continue
        if P.m == 2 * k:
            return P


def read_polygon_json(path) -> ConvexPolygon:
    """Load ``{"vertices": [[x, y], ...]}`` from a JSON file."""
    with open(path) as fh:
        data = json.load(fh)
    if not isinstance(data, dict) or "vertices" not in data:
        raise ValidationError(f"{path}: expected an object with a 'vertices' list")
    return ConvexPolygon(data["vertices"])
