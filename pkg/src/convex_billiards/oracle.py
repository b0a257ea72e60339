"""Brute-force verifier based on the translation characterisation of minimisers.

Shortest closed orbits are exactly the shortest 2- and 3-point boundary
configurations that cannot be translated into the open table, with length
``2|q1 - q2|`` for pairs and the perimeter for triples.  This module searches
that set directly, without any billiard construction.

Two tests decide translatability:

* :func:`can_translate_into_interior` solves the translation LP;
* the grid sweep uses an equivalent combinatorial test.  A configuration on
  the boundary touches a set of edges (a vertex touches both of its edges);
  it is stuck iff the outward normals of those edges leave no angular gap
  larger than ``pi``.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from . import geom
from .geom import TAU_SIDE, ConvexPolygon
from .orbits import MinReport, TwoBounceBand, _classify

__all__ = [
    "BoundaryConfig", "can_translate_into_interior", "is_stuck", "brute_force_min",
    "boundary_samples", "config_matches",
]

TAU_ANGLE = 1e-9
THREADS_ENV = "CONVEX_BILLIARDS_THREADS"


def _euclidean(d):
    return np.hypot(d[..., 0], d[..., 1])


@dataclass(frozen=True, eq=False)
class BoundaryConfig:
    """Two or three boundary points, each stored as (edge, arclength).

    A point at arclength 0 is the first vertex of its edge.
    """

    polygon: ConvexPolygon
    edges: tuple
    params: tuple
    metric: Callable = field(default=_euclidean, repr=False)

    def __post_init__(self):
        P = self.polygon
        e = tuple(int(i) % P.m for i in self.edges)
        if len(e) not in (2, 3) or len(self.params) != len(e):
            raise ValueError("a configuration has 2 or 3 points")
        s = tuple(float(np.clip(x, 0.0, P.edge_lengths[i])) for i, x in zip(e, self.params))
        for i, x in zip(e, self.params):
            if not -P.tol <= x <= P.edge_lengths[i] + P.tol:
                raise ValueError(f"parameter {x} outside edge {i}")
        object.__setattr__(self, "edges", e)
        object.__setattr__(self, "params", s)

    @property
    def period(self) -> int:
        return len(self.edges)

    @property
    def points(self) -> np.ndarray:
        P = self.polygon
        return np.array([P.point_on_edge(i, s) for i, s in zip(self.edges, self.params)])

    bounce_points = points
    kind = "config"

    @property
    def length(self) -> float:
        q = self.points
        if len(q) == 2:
            return float(2 * self.metric(q[1] - q[0]))
        return float(self.metric(np.roll(q, -1, axis=0) - q).sum())

    def touched_edges(self) -> set:
        """Edges whose closed segment contains a point of the configuration."""
        P = self.polygon
        out = set()
        for i, s in zip(self.edges, self.params):
            out.add(i)
            if s <= P.tol:
                out.add((i - 1) % P.m)
            elif s >= P.edge_lengths[i] - P.tol:
                out.add((i + 1) % P.m)
        return out

    def in_open_edges(self) -> bool:
        P = self.polygon
        return all(P.tol < s < P.edge_lengths[i] - P.tol for i, s in zip(self.edges, self.params))

    def __repr__(self):
        pts = np.round(self.points, 9).tolist()
        return f"BoundaryConfig(length={self.length:.12g}, points={pts})"


def can_translate_into_interior(P: ConvexPolygon, C, margin: Optional[float] = None) -> bool:
    """Whether some translate of the points lies in the open polygon.

    Maximises the common slack ``s`` of ``<n_i, c_j + t> + s <= b_i`` over
    translations ``t``; translatable iff the optimum exceeds ``margin``
    (default ``TAU_SIDE * diameter``).
    """
    q = C.points if isinstance(C, BoundaryConfig) else np.asarray(C, dtype=float)
    margin = P.tol if margin is None else margin
    h = (q @ P.normals.T).max(axis=0)
    A = np.hstack([P.normals, np.ones((P.m, 1))])
    res = linprog([0.0, 0.0, -1.0], A_ub=A, b_ub=P.offsets - h,
                  bounds=[(None, None), (None, None), (None, P.diameter)], method="highs")
    if res.status != 0:
        return False
    return bool(-res.fun > margin)


def _stuck_sets(P: ConvexPolygon, masks: np.ndarray) -> np.ndarray:
    """Stuck test for edge-set bitmasks: no normal-angle gap exceeds pi."""
    phi = np.mod(P.normal_angles - P.normal_angles[0], 2 * math.pi)
    bits = ((masks[:, None] >> np.arange(P.m, dtype=np.uint64)) & np.uint64(1)).astype(bool)
    count = bits.sum(axis=1)
    # gaps between consecutive selected angles, wrapping around the circle
    big = 4 * math.pi
    ang = np.sort(np.where(bits, phi[None, :], big), axis=1)
    first = ang[:, :1]
    wrapped = np.where(ang < big, ang, first + 2 * math.pi)
    ext = np.hstack([wrapped, first + 2 * math.pi])
    gap = np.diff(ext, axis=1).max(axis=1)
    return (count >= 2) & (gap <= math.pi + TAU_ANGLE)


class _StuckLookup:
    def __init__(self, P: ConvexPolygon):
        if P.m > 62:
            raise ValueError("the brute-force oracle supports at most 62 edges")
        self.P = P
        self.table = None
        if P.m <= 20:
            self.table = _stuck_sets(P, np.arange(2**P.m, dtype=np.uint64))

    def __call__(self, masks: np.ndarray) -> np.ndarray:
        if self.table is not None:
            return self.table[masks.astype(np.int64)]
        u, inv = np.unique(masks, return_inverse=True)
        return _stuck_sets(self.P, u)[inv].reshape(masks.shape)


def is_stuck(P: ConvexPolygon, C: BoundaryConfig) -> bool:
    """Combinatorial non-translatability test for a boundary configuration."""
    mask = np.uint64(sum(1 << e for e in C.touched_edges()))
    return bool(_stuck_sets(P, np.array([mask]))[0])


@dataclass
class _Samples:
    edge: np.ndarray
    s: np.ndarray
    points: np.ndarray
    mask: np.ndarray
    code: np.ndarray


def boundary_samples(P: ConvexPolygon, N: int) -> _Samples:
    """About ``N`` arclength-uniform boundary samples containing every vertex.

    ``code`` is ``e`` for a point in the open edge ``e`` and ``m + e`` for
    the first vertex of edge ``e``.
    """
    m = P.m
    counts = np.maximum(1, np.rint(N * P.edge_lengths / P.perimeter).astype(int))
    edge = np.repeat(np.arange(m), counts)
    frac = np.concatenate([np.arange(c) / c for c in counts])
    s = frac * P.edge_lengths[edge]
    pts = P.vertices[edge] + s[:, None] * P.tangents[edge]
    is_vertex = frac == 0
    bit = np.uint64(1) << edge.astype(np.uint64)
    prev = np.uint64(1) << ((edge - 1) % m).astype(np.uint64)
    mask = np.where(is_vertex, bit | prev, bit)
    code = np.where(is_vertex, m + edge, edge)
    return _Samples(edge, s, pts, mask, code)


def _merge(best: dict, sig: np.ndarray, length: np.ndarray, idx: np.ndarray):
    if len(sig) == 0:
        return
    order = np.lexsort((length, sig))
    sig, length, idx = sig[order], length[order], idx[order]
    head = np.concatenate([[True], sig[1:] != sig[:-1]])
    for s, l, ix in zip(sig[head], length[head], idx[head]):
        key = int(s)
        cur = best.get(key)
        if cur is None or (l, tuple(ix)) < (cur[0], tuple(cur[1])):
            best[key] = (float(l), tuple(int(x) for x in ix))


def _sweep_pairs(S: _Samples, stuck, metric, chunk: int = 256) -> dict:
    n = len(S.s)
    C = 2 * int(S.code.max() + 1)
    best: dict = {}
    for a0 in range(0, n - 1, chunk):
        a = np.arange(a0, min(a0 + chunk, n - 1))
        A, B = np.meshgrid(a, np.arange(n), indexing="ij")
        keep = B > A
        A, B = A[keep], B[keep]
        ok = stuck(S.mask[A] | S.mask[B])
        A, B = A[ok], B[ok]
        length = 2 * metric(S.points[B] - S.points[A])
        ca, cb = S.code[A], S.code[B]
        sig = np.minimum(ca, cb) * C + np.maximum(ca, cb)
        _merge(best, sig, length, np.stack([A, B], axis=1))
    return best


def _sweep_triples(S: _Samples, stuck, metric, threads: int = 1) -> dict:
    n = len(S.s)
    C = 2 * int(S.code.max() + 1)
    D = metric(S.points[None, :, :] - S.points[:, None, :])

    def work(a_values):
        best: dict = {}
        for a in a_values:
            rest = np.arange(a + 1, n)
            if len(rest) < 2:
                continue
            B, Cc = np.meshgrid(rest, rest, indexing="ij")
            keep = Cc > B
            B, Cc = B[keep], Cc[keep]
            ok = stuck(S.mask[a] | S.mask[B] | S.mask[Cc])
            B, Cc = B[ok], Cc[ok]
            length = D[a, B] + D[B, Cc] + D[Cc, a]
            codes = np.sort(np.stack([np.full(len(B), S.code[a]), S.code[B], S.code[Cc]], axis=1), axis=1)
            sig = (codes[:, 0] * C + codes[:, 1]) * C + codes[:, 2]
            _merge(best, sig, length, np.stack([np.full(len(B), a), B, Cc], axis=1))
        return best

    parts = [range(k, n, threads) for k in range(threads)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(work, parts))
    else:
        results = [work(parts[0])]
    best: dict = {}
    for r in results:
        for key, (l, ix) in r.items():
            cur = best.get(key)
            if cur is None or (l, ix) < cur:
                best[key] = (l, ix)
    return best


def _domains(P: ConvexPolygon, edge: int, s: float):
    """Refinement domains for one sample: slide on a closed edge or stay at a vertex.

    Yields ``(mask, edge, start, slide)``.
    """
    m = P.m
    if s > 0:
        yield (1 << edge), edge, s, True
        return
    prev = (edge - 1) % m
    yield (1 << edge) | (1 << prev), edge, 0.0, False
    yield (1 << edge), edge, 0.0, True
    yield (1 << prev), prev, float(P.edge_lengths[prev]), True


def _argmin_convex(f, lo: float, hi: float, xatol: float, k: int = 33) -> tuple[float, float]:
    """Minimise a convex function of one variable on ``[lo, hi]``.

    Evaluates ``f`` on a vector of ``k`` points and shrinks the bracket to the
    two cells around the best one.
    """
    while True:
        xs = np.linspace(lo, hi, k)
        fx = f(xs)
        j = int(np.argmin(fx))
        if hi - lo <= xatol:
            return float(xs[j]), float(fx[j])
        lo, hi = xs[max(j - 1, 0)], xs[min(j + 1, k - 1)]


def _descend(P: ConvexPolygon, edges, params, slide, metric, max_sweeps: int = 400):
    """Cyclic coordinate descent on the configuration length.

    Each coordinate is minimised exactly over its closed edge; the length is
    convex in each arclength parameter, so every step is monotone.
    """
    n = len(edges)
    params = [float(s) for s in params]
    q = np.array([P.point_on_edge(e, s) for e, s in zip(edges, params)])
    scale = 2.0 if n == 2 else 1.0

    def total():
        if n == 2:
            return 2 * float(metric(q[1] - q[0]))
        return float(metric(np.roll(q, -1, axis=0) - q).sum())

    cur = total()
    xatol = 1e-13 * P.diameter
    for _ in range(max_sweeps):
        before = cur
        for k in range(n):
            if not slide[k]:
                continue
            e = edges[k]
            others = [q[j] for j in range(n) if j != k]

            def f(xs, e=e, others=others):
                x = P.vertices[e] + np.multiply.outer(xs, P.tangents[e])
                return scale * sum(metric(x - o) for o in others)

            x, _ = _argmin_convex(f, 0.0, float(P.edge_lengths[e]), xatol)
            if f(np.array([x]))[0] <= f(np.array([params[k]]))[0]:
                params[k] = x
                q[k] = P.point_on_edge(e, x)
            cur = total()
        if before - cur <= 1e-15 * max(1.0, cur):
            break
    return params, cur


def _refine(P: ConvexPolygon, S: _Samples, idx: tuple, stuck, metric):
    results = []
    per_point = [list(_domains(P, int(S.edge[i]), float(S.s[i]))) for i in idx]
    for combo in itertools.product(*per_point):
        mask = 0
        for d in combo:
            mask |= d[0]
        if not stuck(np.array([mask], dtype=np.uint64))[0]:
            continue
        edges = [d[1] for d in combo]
        start = [d[2] for d in combo]
        slide = [d[3] for d in combo]
        params, val = _descend(P, edges, start, slide, metric)
        C = BoundaryConfig(P, tuple(edges), tuple(params), metric)
        if not is_stuck(P, C):
            continue
        results.append(C)
    return results


def _degenerate(C: BoundaryConfig) -> bool:
    """A flat triple is a pair in disguise.

    With two (nearly) coincident points, or all three on a line, the length
    is twice the distance between the extreme points and, by convexity, the
    triple is translatable iff that pair is.  The pair is swept separately.
    """
    if C.period != 3:
        return False
    q = C.points
    diam = C.polygon.diameter
    d = np.linalg.norm(q - np.roll(q, -1, axis=0), axis=1)
    area2 = abs(float(geom.cross(q[1] - q[0], q[2] - q[0])))
    return bool(d.min() <= 1e-6 * diam or area2 <= 1e-6 * diam * diam)


def _same(C1: BoundaryConfig, C2: BoundaryConfig, tol: float) -> bool:
    if C1.period != C2.period:
        return False
    a, b = C1.points, C2.points
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2)
    return bool(d.min(axis=1).max() <= tol and d.min(axis=0).max() <= tol)


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def brute_force_min(P: ConvexPolygon, N: int = 720, refine: bool = True,
                    metric: Optional[Callable] = None, n_triples: Optional[int] = None,
                    keep: int = 6) -> MinReport:
    """Shortest non-translatable boundary configuration, by exhaustive sampling.

    Pairs are swept over about ``N`` boundary samples.  Triples are swept
    over ``n_triples`` samples, by default the count whose triple total
    matches the ``N**2`` pair budget.  With ``refine`` the best sampled
    configurations are polished by coordinate descent in their arclength
    parameters.  ``metric`` maps displacement arrays ``(..., 2)`` to lengths
    and must be symmetric; the default is Euclidean.
    """
    if N < 16:
        raise ValueError("grid size must be at least 16")
    metric = _euclidean if metric is None else metric
    stuck = _StuckLookup(P)
    S2 = boundary_samples(P, N)
    if n_triples is None:
        n_triples = min(N, int(math.ceil((6.0 * N * N) ** (1 / 3))))
    S3 = boundary_samples(P, n_triples)
    found = []
    for S, best, h in ((S2, _sweep_pairs(S2, stuck, metric), P.perimeter / len(S2.s)),
                       (S3, _sweep_triples(S3, stuck, metric, _thread_count()), P.perimeter / len(S3.s))):
        ranked = sorted(best.values())
        if not ranked:
            continue
        cutoff = ranked[0][0] + 8 * h * (1 + P.diameter)
        for l, idx in ranked[:keep] if refine else ranked[:1]:
            if refine and l > cutoff:
                break
            found.append((S, idx))
    configs = []
    for S, idx in found:
        if refine:
            configs.extend(_refine(P, S, idx, stuck, metric))
        else:
            configs.append(BoundaryConfig(P, tuple(int(S.edge[i]) for i in idx),
                                          tuple(float(S.s[i]) for i in idx), metric))
    configs = [C for C in configs if not _degenerate(C)]
    ell = min(C.length for C in configs)
    slack = 1e-7 if refine else 1e-12
    mins = []
    for C in sorted(configs, key=lambda c: c.length):
        if C.length <= ell * (1 + slack) and not any(_same(C, D, 1e-6 * P.diameter) for D in mins):
            mins.append(C)
    r, _ = geom.inradius(P)
    return MinReport(polygon=P, ell=ell, minimizers=tuple(mins), width=geom.width(P), inradius=r,
                     classification=_classify(mins), capacity=ell)


def config_matches(P: ConvexPolygon, C: BoundaryConfig, minimizer, tol: float) -> bool:
    """Whether configuration ``C`` coincides with an orbit or band minimiser."""
    q = C.points
    if isinstance(minimizer, TwoBounceBand):
        return C.period == 2 and minimizer.contains_segment(P, q[0], q[1], tol)
    b = np.asarray(minimizer.bounce_points)
    if len(b) != len(q):
        return False
    d = np.linalg.norm(q[:, None, :] - b[None, :, :], axis=2)
    return bool(d.min(axis=1).max() <= tol and d.min(axis=0).max() <= tol)
