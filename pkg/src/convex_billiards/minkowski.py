"""Billiards in a normed plane whose unit ball is a symmetric convex body ``K``.

Segment lengths are measured by the gauge ``|v|_K = min{lam : v in lam K}``
and a bounce point ``x`` between ``a`` and ``b`` is critical for
``y -> |y - a|_K + |y - b|_K`` along the boundary.  With the disc gauge every
quantity reduces to its Euclidean counterpart.

Two-bounce orbits follow the Euclidean enumeration with K-altitudes in place
of perpendiculars.  Regular three-bounce orbits are located numerically: the
total K-length of a triangle inscribed in three edge lines is convex in the
three arclength parameters, so coordinate descent converges to the unique
Fagnano orbit when it exists and to a boundary point of the parameter box
otherwise.
"""

from __future__ import annotations

import math
from itertools import combinations
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from . import geom
from .errors import DegenerateSegment, GaugeError, NonConvergence, PointOnLine, ValidationError
from .geom import TAU_PAR, ConvexPolygon, Line, Triangle, cross
from .orbits import (MinReport, Orbit, TwoBounceBand, _classify, _emit, _on_closed_edge, _site,
                     _support_line)

__all__ = [
    "TAU_REFL", "Gauge", "disc", "lp", "ellipse", "parse_gauge",
    "k_length", "k_altitude", "k_altitude_parallels",
    "MinkowskiOrbit", "MinkowskiBand", "minkowski_two_bounce", "minkowski_fagnano_search",
    "minkowski_three_bounce", "minkowski_shortest", "criticality_residuals",
    "minkowski_violations", "gauge_by_bisection",
]

TAU_REFL = 1e-8
POLISH_SWEEPS = 6
BOX_TOL = 1e-7


def _floats(v) -> np.ndarray:
    # extended precision passes through, everything else becomes float64
    v = np.asarray(v)
    return v if v.dtype == np.longdouble else v.astype(float)


class Gauge:
    """Norm-and-gradient oracle of a symmetric, strictly convex, smooth body.

    ``norm`` maps arrays of shape ``(..., 2)`` to ``(...)``; ``gradient`` maps
    to ``(..., 2)`` and may return anything at the origin (it is replaced by
    zero there).  Oracles written with numpy ufuncs also work in
    ``np.longdouble``, which the Fagnano search uses for its final polish.

    Unless ``validate`` is false, random probes check symmetry,
    homogeneity, strict convexity and the gradient against central finite
    differences; failures raise :class:`GaugeError`.
    """

    def __init__(self, norm: Callable, gradient: Callable, descriptor: str = "external",
                 validate: bool = True, seed: int = 0):
        self._norm = norm
        self._gradient = gradient
        self.descriptor = descriptor
        if validate:
            self.validate(seed=seed)

    def norm(self, v) -> np.ndarray:
        v = _floats(v)
        return np.asarray(self._norm(v), dtype=v.dtype)

    def gradient(self, v) -> np.ndarray:
        v = _floats(v)
        zero = ~np.any(v != 0, axis=-1)
        if np.any(zero):
            safe = np.where(zero[..., None], 1.0, v).astype(v.dtype)
            g = np.asarray(self._gradient(safe), dtype=v.dtype)
            return np.where(zero[..., None], 0.0, g).astype(v.dtype)
        return np.asarray(self._gradient(v), dtype=v.dtype)

    def __call__(self, v) -> np.ndarray:
        return self.norm(v)

    def __repr__(self):
        return f"Gauge({self.descriptor!r})"

    def validate(self, n: int = 64, seed: int = 0) -> None:
        rng = np.random.default_rng(seed)
        v = rng.normal(size=(n, 2))
        w = rng.normal(size=(n, 2))
        nv = self.norm(v)
        if not np.all(np.isfinite(nv)) or np.any(nv <= 0):
            raise GaugeError(f"{self.descriptor}: norm must be positive away from 0")
        if np.any(np.abs(self.norm(-v) - nv) > 1e-9 * nv):
            raise GaugeError(f"{self.descriptor}: only symmetric gauges are supported")
        lam = rng.uniform(0.1, 10.0, size=n)
        if np.any(np.abs(self.norm(lam[:, None] * v) - lam * nv) > 1e-9 * lam * nv):
            raise GaugeError(f"{self.descriptor}: norm is not positively homogeneous")
        par = np.abs(cross(geom.unit(v), geom.unit(w))) < 1e-3
        mid = self.norm(0.5 * (v + w))
        avg = 0.5 * (nv + self.norm(w))
        if np.any((mid >= avg * (1 - 1e-12)) & ~par):
            raise GaugeError(f"{self.descriptor}: norm is not strictly convex")
        g = self.gradient(v)
        h = 1e-6 * np.linalg.norm(v, axis=1)
        fd = np.empty_like(v)
        for k in range(2):
            e = np.zeros(2)
            e[k] = 1.0
            fd[:, k] = (self.norm(v + h[:, None] * e) - self.norm(v - h[:, None] * e)) / (2 * h)
        if np.any(np.linalg.norm(g - fd, axis=1) > 1e-6 * np.maximum(1.0, np.linalg.norm(fd, axis=1))):
            raise GaugeError(f"{self.descriptor}: gradient disagrees with finite differences")


def disc() -> Gauge:
    return Gauge(lambda v: np.hypot(v[..., 0], v[..., 1]),
                 lambda v: v / np.hypot(v[..., 0], v[..., 1])[..., None],
                 descriptor="disc", validate=False)


def lp(p: float) -> Gauge:
    """Gauge of the unit ``p``-ball, ``(|x|^p + |y|^p)^(1/p)`` for ``1 < p < inf``."""
    p = float(p)
    if not (1 < p < math.inf):
        raise GaugeError("p-ball gauges need 1 < p < inf")
    if p == 2:
        G = disc()
        G.descriptor = "lp:2"
        return G

    def norm(v):
        # factor out the largest coordinate to avoid overflow for large p
        a = np.abs(v)
        m = a.max(axis=-1)
        s = np.where(m > 0, m, 1.0)
        return m * ((a / s[..., None]) ** p).sum(axis=-1) ** (1 / p)

    def grad(v):
        n = norm(v)
        return np.sign(v) * (np.abs(v) / n[..., None]) ** (p - 1)

    # strictly convex for every finite p > 1; the numerical probe would flag
    # the nearly flat sides of large p as a false positive
    return Gauge(norm, grad, descriptor=f"lp:{p:g}", validate=False)


def ellipse(a: float, b: float) -> Gauge:
    """Gauge of the ellipse with semi-axes ``a`` and ``b``."""
    if not (a > 0 and b > 0):
        raise GaugeError("ellipse semi-axes must be positive")
    s = np.array([1 / a, 1 / b])

    def norm(v):
        w = v * s
        return np.hypot(w[..., 0], w[..., 1])

    return Gauge(norm, lambda v: v * s * s / norm(v)[..., None], descriptor=f"ellipse:{a:g},{b:g}",
                 validate=False)


def parse_gauge(spec: str) -> Gauge:
    """Gauge from ``disc``, ``lp:p`` or ``ellipse:a,b``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "disc" and not arg:
            return disc()
        if kind == "lp":
            return lp(float(arg))
        if kind == "ellipse":
            a, b = (float(x) for x in arg.split(","))
            return ellipse(a, b)
    except ValueError as exc:
        raise GaugeError(f"bad gauge specification {spec!r}: {exc}") from None
    raise GaugeError(f"unknown gauge specification {spec!r}")


def gauge_by_bisection(inside: Callable[[np.ndarray], bool], v, hi: float = 1.0, iters: int = 200) -> float:
    """``min{lam : v in lam K}`` from a membership test of ``K``, by bisection."""
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return 0.0
    while not inside(v / hi):
        hi *= 2
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if inside(v / mid):
            hi = mid
        else:
            lo = mid
    return hi


# -- segments ---------------------------------------------------------------------

def k_length(K: Gauge, a, b) -> float:
    return float(K.norm(geom.as_point(b) - geom.as_point(a)))


def k_altitude(K: Gauge, v, L: Line) -> np.ndarray:
    """Point of ``L`` closest to ``v`` in the K-distance.

    The distance along the line is strictly convex, so the root of its
    derivative is bracketed around the Euclidean foot and then refined.
    """
    v = geom.as_point(v)
    d = L.direction
    off = abs(cross(v - L.point, d))
    scale = max(1.0, float(np.abs(v).max()), float(np.abs(L.point).max()))
    if off <= TAU_PAR * scale:
        raise PointOnLine("the point lies on the line")
    t0 = L.param(v)

    def g(t):
        return float(np.dot(K.gradient(L.at(t) - v), d))

    lo, hi, step = t0, t0, off
    while g(lo) > 0:
        lo -= step
        step *= 2
    step = off
    while g(hi) < 0:
        hi += step
        step *= 2
    if g(lo) == 0:
        return L.at(lo)
    if g(hi) == 0:
        return L.at(hi)
    t = brentq(g, lo, hi, xtol=1e-15 * scale, rtol=4 * np.finfo(float).eps, maxiter=500)
    return L.at(t)


def k_altitude_parallels(K: Gauge, a, b) -> tuple[Line, Line]:
    """Parallel lines through ``a`` and ``b`` to which ``ab`` is a K-altitude."""
    a, b = geom.as_point(a), geom.as_point(b)
    if np.allclose(a, b, rtol=0, atol=1e-15 * max(1.0, float(np.abs(a).max()))):
        raise DegenerateSegment("the segment has coincident end points")
    d = geom.unit(geom.perp(K.gradient(b - a)))
    return Line(a, d), Line(b, d)


# -- orbits -----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MinkowskiOrbit(Orbit):
    """Closed K-billiard orbit.

    ``length`` stays Euclidean; ``k_length`` is the gauge length and
    ``residuals`` the criticality residuals at the bounce points.
    """

    gauge: Optional[Gauge] = field(default=None, repr=False)
    k_length: float = field(init=False)
    residuals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        q = self.bounce_points
        object.__setattr__(self, "k_length", _k_closed_length(self.gauge, q))
        object.__setattr__(self, "residuals", criticality_residuals(self.gauge, q, self.support_lines))

    def __repr__(self):
        pts = np.round(self.bounce_points, 9).tolist()
        return f"MinkowskiOrbit(kind={self.kind!r}, k_length={self.k_length:.12g}, bounce_points={pts})"


def _k_closed_length(K: Gauge, q: np.ndarray) -> float:
    if len(q) == 2:
        return 2.0 * float(K.norm(q[1] - q[0]))
    return float(K.norm(np.roll(q, -1, axis=0) - q).sum())


def _k_reflection_vectors(K: Gauge, q: np.ndarray) -> np.ndarray:
    return K.gradient(q - np.roll(q, 1, axis=0)) + K.gradient(q - np.roll(q, -1, axis=0))


def criticality_residuals(K: Gauge, q, support_lines) -> np.ndarray:
    """``|<grad|x - a|_K + grad|x - b|_K, t>|`` at each bounce ``x``."""
    nu = _k_reflection_vectors(K, np.asarray(q, dtype=float))
    t = np.array([L.direction for L in support_lines])
    return np.abs(np.einsum("ij,ij->i", nu, t))


def minkowski_violations(P: ConvexPolygon, orbit: MinkowskiOrbit, tol: Optional[float] = None) -> list:
    """Empty list iff ``orbit`` is a closed K-billiard orbit on ``P``.

    At every bounce the K-reflection vector must be an outward support vector,
    and it must be orthogonal to the edge at smooth bounces within ``TAU_REFL``.
    """
    tol = P.tol if tol is None else tol
    K = orbit.gauge
    q = orbit.bounce_points
    out = []
    nu = _k_reflection_vectors(K, q)
    for i, (p, v) in enumerate(zip(q, nu)):
        if not P.on_boundary(p, tol):
            out.append(f"bounce {i} is not on the boundary")
            continue
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            out.append(f"bounce {i}: degenerate reflection vector")
            continue
        if np.max((P.vertices - p) @ (v / nv)) > tol:
            out.append(f"bounce {i}: reflection vector is not an outward support vector")
        elif abs(np.dot(v, orbit.support_lines[i].direction)) > TAU_REFL * max(1.0, nv):
            out.append(f"bounce {i}: criticality residual above tolerance")
    if abs(orbit.k_length - _k_closed_length(K, q)) > 1e-9 * max(1.0, orbit.k_length):
        out.append("stored K-length does not match the bounce points")
    return out


def _morbit(K, q, sites, lines, kind, **kw) -> MinkowskiOrbit:
    return MinkowskiOrbit(np.asarray(q, dtype=float), sites, lines, kind=kind, gauge=K, **kw)


@dataclass(frozen=True, eq=False)
class MinkowskiBand(TwoBounceBand):
    """Band of parallel 2-bounce K-orbits; ``offset`` joins a base point to its partner."""

    offset: np.ndarray = None
    k_length: float = 0.0

    def orbit_at(self, P: ConvexPolygon, s: float) -> MinkowskiOrbit:
        i, j = self.edges
        x = P.point_on_edge(i, s)
        return _band_morbit(P, self.representatives[0].gauge, i, j, x, x + self.offset)

    def contains_segment(self, P: ConvexPolygon, a, b, tol: Optional[float] = None) -> bool:
        tol = P.tol if tol is None else tol
        i, j = self.edges
        for p, q in ((a, b), (b, a)):
            if _on_closed_edge(P, i, p, tol) and _on_closed_edge(P, j, q, tol):
                if np.linalg.norm(np.asarray(q) - np.asarray(p) - self.offset) <= tol:
                    return True
        return False

    def __repr__(self):
        s0, s1 = self.interval
        return f"MinkowskiBand(edges={self.edges}, k_length={self.k_length:.12g}, interval=({s0:.9g}, {s1:.9g}))"


def _band_morbit(P, K, i, j, x, y) -> MinkowskiOrbit:
    si, x = _site(P, i, float(np.dot(x - P.vertices[i], P.tangents[i])))
    sj, y = _site(P, j, float(np.dot(y - P.vertices[j], P.tangents[j])))
    t = P.tangents[i]
    return _morbit(K, [x, y], (si, sj), (_support_line(P, si, x, t), _support_line(P, sj, y, t)), "band")


def _k_bands(P: ConvexPolygon, K: Gauge) -> list:
    n, t, L, V, m = P.normals, P.tangents, P.edge_lengths, P.vertices, P.m
    out = []
    for i in range(m):
        for j in range(i + 1, m):
            if abs(cross(n[i], n[j])) > TAU_PAR or np.dot(n[i], n[j]) > 0:
                continue
            # shortest vector from line i to line j
            w = k_altitude(K, V[i], P.edge_line(j)) - V[i]
            c = float(np.dot(V[i] + w - V[j], t[j]))
            s0, s1 = max(0.0, c - L[j]), min(L[i], c)
            if s1 - s0 <= P.tol:
                continue
            reps = tuple(_band_morbit(P, K, i, j, V[i] + s * t[i], V[i] + s * t[i] + w) for s in (s0, s1))
            kl = 2.0 * float(K.norm(w))
            out.append(MinkowskiBand((i, j), geom.unit(w), (s0, s1), 2.0 * float(np.hypot(*w)), reps,
                                     offset=w, k_length=kl))
    return out


def minkowski_two_bounce(P: ConvexPolygon, K: Gauge, full: bool = False) -> tuple[list, list]:
    """2-bounce K-orbits on ``P``: ``(bands, orbits)``.

    Same three cases as the Euclidean enumeration: bands of K-altitudes
    between parallel edges; K-altitudes from a vertex to an edge whose foot
    lies on the closed edge, kept when the parallel to the edge through the
    vertex supports ``P``; and, with ``full``, vertex pairs whose K-altitude
    parallels both support ``P``.
    """
    V, m = P.vertices, P.m
    bands = _k_bands(P, K)
    orbits = []
    for e in range(m):
        line = P.edge_line(e)
        cone = P.in_normal_cone(np.arange(m), np.broadcast_to(-P.normals[e], (m, 2)))
        for k in range(m):
            if k == e or k == (e + 1) % m or not cone[k]:
                continue
            y = k_altitude(K, V[k], line)
            s = float(np.dot(y - V[e], P.tangents[e]))
            if not -P.tol <= s <= P.edge_lengths[e] + P.tol:
                continue
            site, y = _site(P, e, s)
            kind = "vertex-edge" if site[0] == "e" else "vertex-vertex"
            lines = (Line(V[k], P.tangents[e]), line)
            orbits.append(_morbit(K, [V[k], y], (("v", k), site), lines, kind))
    if full:
        a, b = np.triu_indices(m, 1)
        g = K.gradient(V[a] - V[b])
        ok = P.in_normal_cone(a, g) & P.in_normal_cone(b, -g)
        for i, j in zip(a[ok], b[ok]):
            L1, L2 = k_altitude_parallels(K, V[i], V[j])
            orbits.append(_morbit(K, [V[i], V[j]], (("v", int(i)), ("v", int(j))), (L1, L2), "vertex-vertex"))
    seen, kept = set(), []
    for c in orbits:
        key = c.key()
        if key in seen or any(B.contains_segment(P, *c.bounce_points) for B in bands):
            continue
        seen.add(key)
        kept.append(c)
    _emit(P, kept)
    for B in bands:
        _emit(P, B.representatives)
    return bands, kept


# -- Fagnano search -----------------------------------------------------------------

def _monotone_root(g, hi, iters: int = 200) -> np.ndarray:
    """Minimiser on ``[0, hi]`` of convex functions with derivative ``g``.

    Vectorised Illinois iteration on the sign change of ``g``; an end point is
    returned where the derivative does not change sign.
    """
    hi = np.array(hi)
    lo = np.zeros_like(hi)
    eps = np.finfo(hi.dtype).eps
    glo, ghi = g(lo), g(hi)
    out = np.where(glo >= 0, lo, hi)
    run = (glo < 0) & (ghi > 0)
    side = np.zeros(len(hi), dtype=int)
    for _ in range(iters):
        if not run.any():
            break
        den = np.where(run, ghi - glo, 1.0)
        x = np.clip((lo * ghi - hi * glo) / den, lo, hi)
        gx = g(x)
        up = gx > 0
        # Illinois: halve the stale end when the same side is replaced twice
        glo = np.where(run & up & (side == 1), 0.5 * glo, glo)
        ghi = np.where(run & ~up & (side == -1), 0.5 * ghi, ghi)
        hi = np.where(run & up, x, hi)
        ghi = np.where(run & up, gx, ghi)
        lo = np.where(run & ~up, x, lo)
        glo = np.where(run & ~up, gx, glo)
        side = np.where(up, 1, -1)
        exact = run & (gx == 0)
        out = np.where(exact, x, out)
        narrow = run & ~exact & (hi - lo <= 4 * eps * np.maximum(np.abs(hi), 1e-300))
        out = np.where(narrow, 0.5 * (lo + hi), out)
        run &= ~(exact | narrow)
    return np.where(run, 0.5 * (lo + hi), out)


def _solve_coordinate(K: Gauge, X0, T, L, A, B) -> np.ndarray:
    """Minimise ``|x - a|_K + |x - b|_K`` over ``x = X0 + s T``, ``s in [0, L]``."""
    def g(s):
        x = X0 + s[:, None] * T
        return np.einsum("ij,ij->i", K.gradient(x - A) + K.gradient(x - B), T)

    return _monotone_root(g, L)


def _total(K: Gauge, V, T, S):
    q = V + S[:, :, None] * T
    return q, K.norm(np.roll(q, -1, axis=1) - q).sum(axis=1)


def _grad(K: Gauge, V, T, S) -> np.ndarray:
    q = V + S[:, :, None] * T
    nu = K.gradient(q - np.roll(q, 1, axis=1)) + K.gradient(q - np.roll(q, -1, axis=1))
    return np.einsum("bei,bei->be", nu, T)


def _line_search(K: Gauge, V, T, L, S, d) -> np.ndarray:
    """Exact step along ``+-d`` from ``S``, clipped to the parameter box."""
    d = d * np.where(np.einsum("be,be->b", _grad(K, V, T, S), d) > 0, -1.0, 1.0)[:, None]
    # drop components pushing a coordinate already at its bound outwards
    d = np.where(((S <= 0) & (d < 0)) | ((S >= L) & (d > 0)), 0.0, d)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        room = np.where(d > 0, (L - S) / d, np.where(d < 0, -S / d, np.inf))
    amax = np.min(room, axis=1)
    amax = np.where(np.isfinite(amax) & (amax > 0), amax, 0.0)

    def g(a):
        return np.einsum("be,be->b", _grad(K, V, T, S + a[:, None] * d), d)

    alpha = _monotone_root(g, amax)
    return np.clip(S + alpha[:, None] * d, 0.0, L)


def _soft_direction(K: Gauge, V, T, S, h, fixed=None) -> np.ndarray:
    """Eigenvector of the smallest eigenvalue of a finite-difference Hessian.

    Coordinates flagged in ``fixed`` are left out, so the direction is the
    softest one of the face they span.
    """
    H = np.empty(S.shape + (3,))
    for k in range(3):
        e = np.zeros(3)
        e[k] = 1.0
        H[:, :, k] = (_grad(K, V, T, S + h[:, None] * e) - _grad(K, V, T, S - h[:, None] * e)) / (2 * h[:, None])
    H = 0.5 * (H + np.swapaxes(H, 1, 2)).astype(float)
    if fixed is not None:
        big = 10 * np.abs(H).max(axis=(1, 2)) + 1.0
        cross = fixed[:, :, None] | fixed[:, None, :]
        H = np.where(cross, 0.0, H) + np.eye(3) * np.where(fixed, big[:, None], 0.0)[:, None, :]
    return np.linalg.eigh(H)[1][:, :, 0].astype(S.dtype)


def _interior(S, L):
    margin = 1e-9 * np.max(L, axis=1)[:, None]
    return np.all((S > margin) & (S < L - margin), axis=1)


def _sweep(K: Gauge, V, T, L, S, diam, free=None) -> np.ndarray:
    """One round of coordinate descent plus two exact line searches.

    The line searches follow the displacement of the round and the softest
    Hessian direction; they cross flat valleys of the length that coordinate
    moves alone traverse very slowly.
    """
    s0 = S
    s = S.copy()
    for e in range(3):
        q = V + s[:, :, None] * T
        new = _solve_coordinate(K, V[:, e], T[:, e], L[:, e], q[:, (e - 1) % 3], q[:, (e + 1) % 3])
        s[:, e] = new if free is None else np.where(free[:, e], new, s[:, e])
    mask = 1.0 if free is None else free.astype(s.dtype)
    s = _line_search(K, V, T, L, s, (s - s0) * mask)
    # coordinates held at an end by the gradient span no part of the valley
    g = _grad(K, V, T, s)
    fixed = ((s <= 0) & (g > 0)) | ((s >= L) & (g < 0))
    if free is not None:
        fixed |= ~free
    s = _line_search(K, V, T, L, s, _soft_direction(K, V, T, s, 1e-4 * diam, fixed) * mask)
    return s


def _steepest_feasible(K: Gauge, V, T, L, S) -> tuple[np.ndarray, np.ndarray]:
    """Most negative one-sided directional derivative over feasible directions.

    Directions are normalised to unit max-norm.  Smooth terms contribute
    their gradient; when two bounce points coincide at a shared vertex the
    length is not differentiable there, and besides moving either point alone
    (slope ``|t|_K`` from the zero-length segment) both may leave the vertex
    together.  That joint slope is convex in the mixing weight and minimised
    by ternary search.  Returns ``(slope, direction)`` per problem.
    """
    q = V + S[:, :, None] * T
    diam = np.max(L, axis=1)[:, None]
    nxt = np.linalg.norm(q - np.roll(q, -1, axis=1), axis=-1) <= 1e-12 * diam
    prv = np.roll(nxt, 1, axis=1)
    gp = K.gradient(q - np.roll(q, 1, axis=1))
    gn = K.gradient(q - np.roll(q, -1, axis=1))
    g = np.einsum("bei,bei->be", np.where(prv[..., None], 0, gp) + np.where(nxt[..., None], 0, gn), T)
    kt = K.norm(T)
    lo, hi = S <= 1e-12 * diam, S >= L - 1e-12 * diam
    best = np.full(len(S), np.inf, dtype=S.dtype)
    dirn = np.zeros_like(S)

    def update(slope, d, where):
        better = where & (slope < best)
        best[better] = slope[better]
        dirn[better] = d[better]

    for e in range(3):
        for sign, feasible in ((1.0, ~hi[:, e]), (-1.0, ~lo[:, e])):
            d = np.zeros_like(S)
            d[:, e] = sign
            update(sign * g[:, e] + kt[:, e] * (prv[:, e] + nxt[:, e]), d, feasible)
    for e in range(3):
        f = (e + 1) % 3
        has = nxt[:, e]
        if not has.any():
            continue
        se = np.where(lo[:, e], 1.0, -1.0)
        sf = np.where(lo[:, f], 1.0, -1.0)

        def phi(a):
            de, df = se * a, sf * (1 - a)
            disp = de[:, None] * T[:, e] - df[:, None] * T[:, f]
            return K.norm(disp) + g[:, e] * de + g[:, f] * df

        a0, a1 = np.zeros(len(S), dtype=S.dtype), np.ones(len(S), dtype=S.dtype)
        for _ in range(90):
            m0, m1 = (2 * a0 + a1) / 3, (a0 + 2 * a1) / 3
            left = phi(m0) <= phi(m1)
            a1 = np.where(left, m1, a1)
            a0 = np.where(left, a0, m0)
        a = 0.5 * (a0 + a1)
        d = np.zeros_like(S)
        d[:, e], d[:, f] = se * a, sf * (1 - a)
        scale = np.maximum(np.abs(d).max(axis=1), 1e-300)
        update(phi(a) / scale, d / scale[:, None], has)
    return best, dirn


def _escape(K: Gauge, V, T, L, S, d) -> np.ndarray:
    """Backtracking step from ``S`` along the descent direction ``d`` within the box."""
    with np.errstate(divide="ignore", invalid="ignore"):
        room = np.where(d > 0, (L - S) / d, np.where(d < 0, -S / d, np.inf))
    alpha = np.min(room, axis=1)
    f0 = _total(K, V, T, S)[1]
    out = S.copy()
    todo = np.isfinite(alpha) & (alpha > 0)
    for _ in range(80):
        if not todo.any():
            break
        trial = np.clip(S + alpha[:, None] * d, 0.0, L)
        down = todo & (_total(K, V, T, trial)[1] < f0)
        out[down] = trial[down]
        todo &= ~down
        alpha = 0.5 * alpha
    return out


def _box_minimum(K: Gauge, V, T, L, S, diam, snap: float = 1e-3, sweeps: int = 50):
    """Try to certify a minimum on the boundary of the parameter box.

    Two active sets are tried: parameters within ``snap`` (relative) of an
    end of their side, then only those exactly at an end.  The active ones
    are pinned and the others re-minimised; a candidate is accepted where no
    feasible direction, joint moves out of a shared vertex included, has
    slope below ``-BOX_TOL``.  Returns the candidate, the acceptance mask and
    the steepest feasible direction of the first candidate.
    """
    tiny = 1e-12 * diam[:, None]
    out, accepted, escape = None, None, None
    for lo, hi in ((S <= snap * L, S >= (1 - snap) * L), (S <= tiny, S >= L - tiny)):
        pinned = lo | hi
        X = np.where(lo, 0.0, np.where(hi, L, S))
        for _ in range(sweeps):
            X, prev = _sweep(K, V, T, L, X, diam, free=~pinned), X
            if np.all(np.abs(X - prev) <= 1e-15 * diam[:, None]):
                break
        slope, d = _steepest_feasible(K, V, T, L, X)
        ok = pinned.any(axis=1) & (slope >= -BOX_TOL)
        if out is None:
            out, accepted, escape = X, ok, d
        else:
            take = ok & ~accepted
            out[take] = X[take]
            accepted = accepted | ok
        if accepted.all():
            break
    return out, accepted, escape


def _fagnano_batch(K: Gauge, V, T, L, S, max_sweeps: int = 2000, tol: float = TAU_REFL):
    """Coordinate descent for ``B`` triangle problems at once.

    ``V[b, e]`` and ``T[b, e]`` give the start point and unit tangent of side
    ``e`` of problem ``b``, ``L[b, e]`` its length and ``S[b, e]`` the start
    parameter.  Returns ``(S, status, sweeps)`` with status 1 for an interior
    critical point, 0 for a certified minimum on the boundary of the
    parameter box and -1 for no convergence.

    Converged interior points get ``POLISH_SWEEPS`` further sweeps in
    extended precision, so that searches from different starts agree even
    when the length is flat to high order around its minimum.
    """
    S = np.array(S, dtype=float)
    nb = len(S)
    status = np.full(nb, -1)
    active = np.ones(nb, dtype=bool)
    diam = np.max(L, axis=1)
    res = np.full(nb, np.inf)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        idx = np.nonzero(active)[0]
        v, t, l = V[idx], T[idx], L[idx]
        s = _sweep(K, v, t, l, S[idx], diam[idx])
        S[idx] = s
        res[idx] = np.abs(_grad(K, v, t, s)).max(axis=1)
        done = _interior(s, l) & (res[idx] <= tol)
        status[idx[done]] = 1
        near = ~done & np.any((s <= 1e-3 * l) | (s >= (1 - 1e-3) * l), axis=1)
        if near.any():
            j = idx[near]
            sb, ok, d = _box_minimum(K, V[j], T[j], L[j], S[j], diam[j])
            S[j[ok]] = sb[ok]
            status[j[ok]] = 0
            done[near] = ok
            # a rejected candidate comes with a descent direction; coordinate
            # moves alone may be stuck at a vertex shared by two bounces
            bad = ~ok
            if bad.any():
                jb = j[bad]
                out = _escape(K, V[jb], T[jb], L[jb], sb[bad], d[bad])
                better = _total(K, V[jb], T[jb], out)[1] < _total(K, V[jb], T[jb], S[jb])[1]
                S[jb[better]] = out[better]
        active[idx[done]] = False
        if not active.any():
            break
    j = np.nonzero(status == 1)[0]
    if len(j):
        ld = np.longdouble
        v, t, l, s = V[j].astype(ld), T[j].astype(ld), L[j].astype(ld), S[j].astype(ld)
        for _ in range(POLISH_SWEEPS):
            s = _sweep(K, v, t, l, s, diam[j].astype(ld))
        S[j] = s.astype(float)
    return S, status, sweeps


def minkowski_fagnano_search(D, K: Gauge, start=None, rng: Optional[np.random.Generator] = None,
                             max_sweeps: int = 2000) -> Optional[MinkowskiOrbit]:
    """Regular 3-bounce K-orbit of the triangle ``D``, searched numerically.

    Minimises the total K-length of triangles with one vertex on each closed
    side by cyclic coordinate descent (side 0, 1, 2, repeated).  A converged
    interior critical point with residuals at most ``TAU_REFL`` is returned;
    there is at most one such orbit.  ``None`` means the minimum lies on the
    boundary of the parameter box, so no Fagnano orbit was found.

    Parameters
    ----------
    start : array of 3 floats, optional
        Initial arclength parameters in ``[0, 1]`` relative to each side;
        midpoints by default, random if ``rng`` is given.

    Raises
    ------
    NonConvergence
        The sweep cap was reached at an interior point with large residuals.
    """
    D = D if isinstance(D, Triangle) else Triangle(getattr(D, "vertices", D))
    if start is None:
        start = rng.uniform(0, 1, size=3) if rng is not None else np.full(3, 0.5)
    frac = np.asarray(start, dtype=float).reshape(1, 3)
    if np.any(frac < 0) or np.any(frac > 1):
        raise ValidationError("start parameters are fractions of the side lengths")
    L = D.edge_lengths[None, :]
    S, status, _ = _fagnano_batch(K, D.vertices[None], D.tangents[None], L, frac * L, max_sweeps=max_sweeps)
    if status[0] == -1:
        raise NonConvergence(f"Fagnano search did not converge in {max_sweeps} sweeps")
    if status[0] == 0:
        return None
    q = D.vertices + S[0, :, None] * D.tangents
    c = _morbit(K, q, tuple(("e", e) for e in range(3)), tuple(D.edge_line(e) for e in range(3)),
                "fagnano", edges=(0, 1, 2), triangle=D)
    _emit(D, [c])
    return c


def _bounded_triples(P: ConvexPolygon) -> np.ndarray:
    """Edge triples whose lines cut out a bounded triangle containing ``P``.

    With normal angles sorted counterclockwise this means every gap between
    consecutive normals of the triple is below ``pi``.
    """
    if P.m < 3:
        return np.empty((0, 3), dtype=int)
    phi = np.mod(P.normal_angles - P.normal_angles[0], 2 * math.pi)
    i, j, k = np.array(list(combinations(range(P.m), 3))).T
    hi = math.pi - TAU_PAR
    ok = (phi[j] - phi[i] < hi) & (phi[k] - phi[j] < hi) & (2 * math.pi - phi[k] + phi[i] < hi)
    return np.stack([i[ok], j[ok], k[ok]], axis=1)


def minkowski_three_bounce(P: ConvexPolygon, K: Gauge, max_sweeps: int = 2000) -> list:
    """Regular 3-bounce K-orbits of ``P``.

    For every edge triple bounding a triangle that contains ``P`` the total
    K-length is minimised over one point per closed edge of ``P``.  An interior
    critical point is critical for the triangle as well, hence its unique
    Fagnano orbit, and it lies in ``P``; conversely such an orbit is the
    minimum over the smaller box.  All triples run as one batch.
    """
    triples = _bounded_triples(P)
    if len(triples) == 0:
        return []
    V = P.vertices[triples]
    T = P.tangents[triples]
    L = P.edge_lengths[triples]
    S, status, _ = _fagnano_batch(K, V, T, L, 0.5 * L, max_sweeps=max_sweeps)
    if np.any(status == -1):
        raise NonConvergence(f"3-bounce search did not converge in {max_sweeps} sweeps")
    out = []
    for tri, s, st in zip(triples, S, status):
        if st != 1:
            continue
        edges = tuple(int(e) for e in tri)
        q = P.vertices[tri] + s[:, None] * P.tangents[tri]
        out.append(_morbit(K, q, tuple(("e", e) for e in edges), tuple(P.edge_line(e) for e in edges),
                           "fagnano", edges=edges))
    return _emit(P, out)


def minkowski_shortest(P: ConvexPolygon, K: Gauge, full: bool = False) -> MinReport:
    """Shortest closed K-billiard orbits of ``P``.

    ``ell`` and the minimiser selection use K-lengths; ``width`` and
    ``inradius`` remain Euclidean.  ``capacity`` is ``ell``, the EHZ capacity
    of ``P`` times the polar body of ``K``.
    """
    bands, two = minkowski_two_bounce(P, K, full=full)
    three = minkowski_three_bounce(P, K)
    cands = list(bands) + list(two) + list(three)
    ell = min(c.k_length for c in cands)
    mins = tuple(c for c in cands if c.k_length <= ell * (1 + 1e-9))
    r, _ = geom.inradius(P)
    return MinReport(polygon=P, ell=ell, minimizers=mins, width=geom.width(P), inradius=r,
                     classification=_classify(mins), capacity=ell, three_bounce=tuple(three),
                     gauge=K.descriptor)
