"""Shortest orbits on general convex tables through inscribed polygons.

A polygon ``T_eps`` inscribed in the table ``T`` with ``T`` inside the
homothet ``(1 + eps) T_eps`` brackets the shortest orbit length,

    ell(T_eps) <= ell(T) <= (1 + eps) ell(T_eps),

because ``ell`` is monotone under inclusion and scales linearly.  Bodies are
described by their support function and a matching boundary point oracle,
both vectorised over directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import geom
from .errors import CertificationFailed, NotCentrallySymmetric, OriginNotInterior, ValidationError
from .geom import TAU_SIDE, ConvexPolygon
from .orbits import MinReport, shortest_orbits

__all__ = [
    "ConvexBody", "EllInterval", "disc", "ellipse", "disc_polygon", "polygon_body",
    "inscribed_polygon", "certify", "ell_interval", "symmetric_sandwich_estimate",
    "boundary_distance", "parse_body", "MAX_DIRECTIONS",
]

MAX_DIRECTIONS = 2**20
START_DIRECTIONS = 8


def directions(n: int, phase: float = 0.0) -> np.ndarray:
    a = phase + 2 * math.pi * np.arange(n) / n
    return np.stack([np.cos(a), np.sin(a)], axis=1)


@dataclass(frozen=True)
class ConvexBody:
    """Planar convex body given by oracles.

    Parameters
    ----------
    support : callable
        ``support(U)`` maps unit directions of shape ``(..., 2)`` to the
        support values ``h(u) = max <x, u>`` of shape ``(...)``.
    boundary_point : callable
        ``boundary_point(U)`` returns a maximiser of ``<x, u>`` for each
        direction, shape ``(..., 2)``.
    descriptor : str
        Human readable tag echoed in reports.
    """

    support: Callable[[np.ndarray], np.ndarray]
    boundary_point: Callable[[np.ndarray], np.ndarray]
    descriptor: str = "body"

    def check(self, n: int = 64, seed: int = 0) -> None:
        """Spot-check subadditivity of ``h`` and consistency of the two oracles."""
        rng = np.random.default_rng(seed)
        a = rng.uniform(0, 2 * math.pi, size=(2, n))
        u, v = np.cos(a), np.sin(a)
        U = np.stack([u[0], v[0]], axis=1)
        W = np.stack([u[1], v[1]], axis=1)
        s = U + W
        ns = np.linalg.norm(s, axis=1)
        hU, hW = self.support(U), self.support(W)
        keep = ns > 1e-6
        hs = ns[keep] * self.support(s[keep] / ns[keep, None])
        scale = float(np.max(np.abs(np.concatenate([hU, hW]))) + 1.0)
        if np.any(hs > hU[keep] + hW[keep] + 1e-9 * scale):
            raise ValidationError(f"{self.descriptor}: support function is not subadditive")
        X = self.boundary_point(U)
        if np.any(np.abs(np.einsum("ij,ij->i", X, U) - hU) > TAU_SIDE * scale):
            raise ValidationError(f"{self.descriptor}: boundary points do not attain the support")


def disc(R: float = 1.0, center=(0.0, 0.0)) -> ConvexBody:
    if not R > 0:
        raise ValidationError("disc radius must be positive")
    c = geom.as_point(center)
    return ConvexBody(lambda U: U @ c + R, lambda U: c + R * np.asarray(U),
                      descriptor=f"disc:{R:g}")


def ellipse(a: float, b: float, center=(0.0, 0.0)) -> ConvexBody:
    """Axis-parallel ellipse with semi-axes ``a`` and ``b``."""
    if not (a > 0 and b > 0):
        raise ValidationError("ellipse semi-axes must be positive")
    c = geom.as_point(center)
    ab2 = np.array([a * a, b * b])

    def h(U):
        U = np.asarray(U)
        return U @ c + np.sqrt((U * U) @ ab2)

    def x(U):
        U = np.asarray(U)
        return c + U * ab2 / np.sqrt((U * U) @ ab2)[..., None]

    return ConvexBody(h, x, descriptor=f"ellipse:{a:g},{b:g}")


def disc_polygon(centers, radii) -> ConvexBody:
    """Intersection of discs.

    The maximiser of ``<x, u>`` is either the extreme point ``c_i + r_i u`` of
    one disc or a pairwise intersection point of two circles; candidates
    outside some disc are discarded.
    """
    C = np.asarray(centers, dtype=float).reshape(-1, 2)
    r = np.asarray(radii, dtype=float).reshape(-1)
    if len(C) != len(r) or len(r) == 0 or np.any(r <= 0):
        raise ValidationError("need one positive radius per disc center")
    corners = []
    for i in range(len(r)):
        for j in range(i + 1, len(r)):
            d = C[j] - C[i]
            dd = float(np.hypot(*d))
            if dd == 0 or dd >= r[i] + r[j] or dd <= abs(r[i] - r[j]):
                continue
            a = (r[i] ** 2 - r[j] ** 2 + dd * dd) / (2 * dd)
            hgt = math.sqrt(max(r[i] ** 2 - a * a, 0.0))
            base = C[i] + a * d / dd
            off = hgt * geom.perp(d) / dd
            corners += [base + off, base - off]
    corners = np.array(corners).reshape(-1, 2)
    tol = 1e-12 * float(np.max(r))

    def inside(X):
        return np.all(np.linalg.norm(X[..., None, :] - C, axis=-1) <= r + tol, axis=-1)

    corners = corners[inside(corners)] if len(corners) else corners
    if len(corners) == 0 and len(r) > 1:
        # one disc inside all the others, or an empty intersection
        keep = [i for i in range(len(r)) if inside((C[i] + r[i] * directions(16))).all()]
        if not keep:
            raise ValidationError("the discs have no common interior")
        C, r = C[keep[:1]], r[keep[:1]]

    def x(U):
        U = np.asarray(U, dtype=float)
        flat = U.reshape(-1, 2)
        cand = C[None, :, :] + r[None, :, None] * flat[:, None, :]
        ok = inside(cand)
        val = np.where(ok, np.einsum("kij,kj->ki", cand, flat), -np.inf)
        best = np.argmax(val, axis=1)
        out = cand[np.arange(len(flat)), best]
        bval = val[np.arange(len(flat)), best]
        if len(corners):
            cv = flat @ corners.T
            jc = np.argmax(cv, axis=1)
            use = cv[np.arange(len(flat)), jc] > bval
            out[use] = corners[jc[use]]
        return out.reshape(U.shape)

    def h(U):
        U = np.asarray(U, dtype=float)
        return np.einsum("...i,...i->...", x(U), U)

    return ConvexBody(h, x, descriptor=f"disc-polygon:{len(r)}")


def polygon_body(P: ConvexPolygon) -> ConvexBody:
    V = P.vertices

    def x(U):
        U = np.asarray(U, dtype=float)
        return V[np.argmax(U @ V.T, axis=-1)]

    return ConvexBody(lambda U: np.max(np.asarray(U, dtype=float) @ V.T, axis=-1), x,
                      descriptor=f"polygon:{P.m}")


@dataclass(frozen=True, eq=False)
class EllInterval:
    """Certified bracket ``lower <= ell(T) <= upper``.

    ``epsilon`` is the requested accuracy and ``upper = (1 + epsilon) lower``;
    ``achieved`` is the (possibly smaller) dilation actually certified for
    ``polygon``, so ``(1 + achieved) lower`` is also a valid upper bound.
    """

    lower: float
    upper: float
    polygon: ConvexPolygon
    epsilon: float
    achieved: float
    center: np.ndarray
    report: Optional[MinReport] = None

    def __contains__(self, value: float) -> bool:
        return self.lower <= value <= self.upper


def certify(B: ConvexBody, P: ConvexPolygon, center) -> float:
    """Smallest ``eps`` with ``B`` inside ``center + (1 + eps)(P - center)``.

    Only the edge normals of the dilated polygon need checking, since it is the
    intersection of its edge half-planes.
    """
    c = geom.as_point(center)
    n = P.normals
    inner = P.offsets - n @ c
    if np.any(inner <= 0):
        raise OriginNotInterior("homothety center is not interior to the inscribed polygon")
    excess = B.support(n) - P.offsets
    return float(max(0.0, np.max(excess / inner)))


def _polygon(B: ConvexBody, n: int) -> Optional[ConvexPolygon]:
    X = B.boundary_point(directions(n))
    try:
        return ConvexPolygon(X)
    except ValidationError:
        return None


def inscribed_polygon(B: ConvexBody, eps: float, max_directions: int = MAX_DIRECTIONS,
                      return_certificate: bool = False):
    """Inscribed polygon ``T_eps`` with ``B`` inside ``(1 + eps) T_eps``.

    The vertices are boundary points of ``B`` for ``n`` uniform directions;
    ``n`` starts at 8 and doubles until the certificate holds.  The dilation
    is about the incenter of the first polygon, kept fixed afterwards.

    Parameters
    ----------
    B : ConvexBody
        The table; its support must be positive, i.e. the origin interior.
    eps : float
        Target relative accuracy, positive.
    return_certificate : bool
        Also return ``(center, achieved_eps)``.

    Raises
    ------
    OriginNotInterior
        A sampled support value is not positive.
    CertificationFailed
        ``max_directions`` reached without meeting ``eps``.
    """
    if not eps > 0:
        raise ValidationError("eps must be positive")
    center = None
    n = START_DIRECTIONS
    while n <= max_directions:
        U = directions(n)
        h = B.support(U)
        if np.any(h <= 0):
            raise OriginNotInterior(f"{B.descriptor}: the origin is not interior to the body")
        P = _polygon(B, n)
        if P is not None:
            if center is None:
                _, center = geom.inradius(P)
            achieved = certify(B, P, center)
            if achieved <= eps:
                return (P, (center, achieved)) if return_certificate else P
        n *= 2
    raise CertificationFailed(f"{B.descriptor}: eps={eps:g} not certified with {max_directions} directions")


def ell_interval(B: ConvexBody, eps: float, **kw) -> EllInterval:
    """Bracket of the shortest orbit length of ``B`` with relative width ``eps``."""
    P, (center, achieved) = inscribed_polygon(B, eps, return_certificate=True, **kw)
    R = shortest_orbits(P)
    return EllInterval(lower=R.ell, upper=(1 + eps) * R.ell, polygon=P, epsilon=float(eps),
                       achieved=achieved, center=center, report=R)


def symmetric_sandwich_estimate(S: ConvexPolygon, r: float) -> tuple[float, float]:
    """Bounds ``(2 width(S), 2 r width(S))`` on ``ell(T)`` whenever ``S`` is inside
    ``T`` and ``T`` inside ``r S``, for centrally symmetric ``S``."""
    if not S.is_centrally_symmetric():
        raise NotCentrallySymmetric("the inner polygon must be centrally symmetric")
    if not r >= 1:
        raise ValidationError("the dilation factor must be at least 1")
    w2 = 2.0 * geom.width(S)
    return w2, r * w2


def boundary_distance(B: ConvexBody, points, n: int = 4096) -> np.ndarray:
    """Distance from interior points to the boundary of ``B``.

    Uses ``min_u h(u) - <x, u>``, exact up to the angular resolution ``n``.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    U = directions(n)
    return np.min(B.support(U)[None, :] - X @ U.T, axis=1)


def parse_body(spec: str) -> ConvexBody:
    """Body from ``disc:R``, ``ellipse:a,b`` or ``polygon:@file.json``."""
    kind, _, arg = spec.partition(":")
    try:
        if kind == "disc":
            return disc(float(arg) if arg else 1.0)
        if kind == "ellipse":
            a, b = (float(x) for x in arg.split(","))
            return ellipse(a, b)
    except ValueError as exc:
        raise ValidationError(f"bad body specification {spec!r}: {exc}") from None
    if kind == "polygon" and arg.startswith("@"):
        return polygon_body(geom.read_polygon_json(arg[1:]))
    raise ValidationError(f"unknown body specification {spec!r}")
