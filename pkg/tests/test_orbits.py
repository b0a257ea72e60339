"""2- and 3-bounce enumeration, minimiser selection and the perturbation ratio."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq
from scipy.spatial import ConvexHull

from convex_billiards import geom, orbits
from convex_billiards.errors import NotAcute, NotStrictlyShorter, NotThreeBounce
from convex_billiards.orbits import Classification, Orbit, TwoBounceBand

SQ3 = math.sqrt(3)

polygons = st.integers(0, 2**32 - 1).flatmap(
    lambda seed: st.integers(3, 12).map(lambda n: geom.random_convex_polygon(np.random.default_rng(seed), n)))


def trapezoid(h):
    """Unit equilateral triangle cut by the horizontal line at height ``h``."""
    return geom.ConvexPolygon([[0, 0], [1, 0], [1 - h / SQ3, h], [h / SQ3, h]])


# -- independent scalar enumerations -------------------------------------------------

def scalar_three_bounce(P):
    """Fagnano orbits of acute edge-line triangles containing P, feet in open edges."""
    keys = set()
    for tri in itertools.combinations(range(P.m), 3):
        L = [P.edge_line(e) for e in tri]
        X = [geom.line_intersection(L[a], L[b]) for a, b in ((0, 1), (1, 2), (2, 0))]
        if any(x is None for x in X):
            continue
        D = geom.Triangle(X)
        if not D.is_acute or not all(D.contains(v, 1e-9) for v in P.vertices):
            continue
        F = orbits.fagnano(D)
        ok = True
        for q in F.bounce_points:
            e = next(e for e in tri if abs(P.normals[e] @ q - P.offsets[e]) <= 1e-9)
            t = float(np.dot(q - P.vertices[e], P.tangents[e]))
            ok &= P.tol < t < P.edge_lengths[e] - P.tol
        if ok:
            keys.add(F.key())
    return keys


def scalar_two_bounce_min(P):
    """Shortest vertex-to-edge altitude whose orthogonal line at the vertex supports P."""
    best = math.inf
    for k in range(P.m):
        for e in range(P.m):
            if k in (e, (e + 1) % P.m):
                continue
            foot = geom.foot_of_perpendicular(P.vertices[k], P.edge_line(e))
            t = float(np.dot(foot - P.vertices[e], P.tangents[e]))
            if not (-P.tol <= t <= P.edge_lengths[e] + P.tol):
                continue
            if geom.is_disjoint_from_interior(P, geom.Line(P.vertices[k], P.tangents[e])):
                best = min(best, 2 * float(np.linalg.norm(foot - P.vertices[k])))
    return best


# -- examples ------------------------------------------------------------------------

class TestExamples:
    def test_unit_square_bands(self, unit_square):
        bands, two = orbits.two_bounce_orbits(unit_square)
        assert len(bands) == 2 and two == []
        for B in bands:
            assert B.length == pytest.approx(2.0)
            assert B.interval == pytest.approx((0.0, 1.0))
        R = orbits.shortest_orbits(unit_square)
        assert R.ell == pytest.approx(2.0, abs=1e-12)
        assert R.classification is Classification.TWO_BOUNCE_ONLY
        assert all(isinstance(m, TwoBounceBand) for m in R.minimizers)

    def test_square_full_mode_adds_diagonals(self, unit_square):
        bands, two = orbits.two_bounce_orbits(unit_square, full=True)
        assert len(bands) == 2
        assert sorted(c.kind for c in two) == ["vertex-vertex"] * 2
        for c in two:
            assert c.length == pytest.approx(2 * math.sqrt(2))
        assert orbits.shortest_orbits(unit_square, full=True).ell == pytest.approx(2.0)

    def test_band_orbits(self, unit_square):
        B = orbits.two_bounce_orbits(unit_square)[0][0]
        c = B.orbit_at(unit_square, 0.3)
        assert c.is_regular and c.length == pytest.approx(2.0)
        assert B.contains_segment(unit_square, *c.bounce_points)
        ends = [r.regular for r in B.representatives]
        assert ends == [(False, False), (False, False)]

    def test_pentagon(self):
        P = geom.regular_polygon(5)
        R = orbits.shortest_orbits(P)
        assert R.ell == pytest.approx(2 * (1 + math.cos(math.pi / 5)), abs=1e-12)
        assert len(R.minimizers) == 5
        assert all(c.kind == "vertex-edge" and c.regular == (False, True) for c in R.minimizers)

    def test_hexagon(self):
        P = geom.regular_polygon(6)
        R = orbits.shortest_orbits(P)
        assert R.ell == pytest.approx(2 * SQ3, abs=1e-12)
        assert len(R.minimizers) == 3 and R.classification is Classification.TWO_BOUNCE_ONLY
        assert len(R.three_bounce) == 2
        for c in R.three_bounce:
            assert c.length == pytest.approx(4.5)
            with pytest.raises(NotStrictlyShorter):
                orbits.perturbation_ratio(P, c)

    def test_equilateral_fagnano(self, equilateral):
        F = orbits.fagnano(equilateral)
        mids = 0.5 * (equilateral.vertices + np.roll(equilateral.vertices, -1, axis=0))
        assert np.allclose(F.bounce_points, mids)
        assert F.length == pytest.approx(1.5)
        assert F.edges == (0, 1, 2)
        assert np.max(orbits.reflection_residuals(F)) < 1e-14
        R = orbits.shortest_orbits(equilateral)
        assert R.ell == pytest.approx(1.5, abs=1e-12)
        assert R.classification is Classification.THREE_BOUNCE_ONLY

    def test_right_triangle(self):
        D = geom.Triangle([[0, 0], [3, 0], [0, 4]])
        R = orbits.shortest_orbits(D)
        assert R.ell == pytest.approx(2 * 2.4, abs=1e-12)
        (c,) = R.minimizers
        assert np.allclose(sorted(c.bounce_points.tolist()), sorted([[0, 0], [1.92, 1.44]]))
        with pytest.raises(NotAcute):
            orbits.fagnano(D)

    def test_obtuse_triangle(self):
        D = geom.Triangle([[0, 0], [4, 0], [1, 1]])
        assert orbits.three_bounce_orbits(D) == []
        R = orbits.shortest_orbits(D)
        assert R.ell == pytest.approx(2 * geom.width(D), abs=1e-12)

    def test_acute_triangle_from_edges(self, equilateral, unit_square):
        D = orbits.acute_triangle_from_edges(equilateral, 0, 1, 2)
        assert D is not None and np.allclose(np.sort(D.vertices, axis=0), np.sort(equilateral.vertices, axis=0))
        assert orbits.acute_triangle_from_edges(unit_square, 0, 1, 2) is None

    def test_perturbation_ratio(self, equilateral):
        F = orbits.fagnano(equilateral)
        assert orbits.perturbation_ratio(equilateral, F) == pytest.approx(2 * SQ3 / 3, abs=1e-12)
        B = orbits.two_bounce_orbits(geom.regular_polygon(5))[1][0]
        with pytest.raises(NotThreeBounce):
            orbits.perturbation_ratio(geom.regular_polygon(5), B)

    def test_report_fields(self, equilateral):
        R = orbits.shortest_orbits(equilateral)
        assert R.capacity == R.ell
        assert orbits.classify_min(R) is R.classification
        assert R.width == pytest.approx(SQ3 / 2) and R.inradius == pytest.approx(SQ3 / 6)


class TestParallelEdgeQuadrilaterals:
    """Quadrilaterals with two parallel edges."""

    def test_obtuse_base_angle_is_two_bounce(self):
        P = geom.ConvexPolygon([[0, 0], [2, 0], [1, 1], [0, 1]])
        R = orbits.shortest_orbits(P)
        assert R.classification is Classification.TWO_BOUNCE_ONLY
        assert R.ell == pytest.approx(2 * geom.width(P))

    def test_cut_triangle_min_of_fagnano_and_band(self):
        for h in (0.45, 0.6, 0.7, 0.8, 0.85):
            R = orbits.shortest_orbits(trapezoid(h))
            assert R.ell == pytest.approx(min(1.5, 2 * h), abs=1e-12)
            assert len(R.three_bounce) == 1
        assert orbits.shortest_orbits(trapezoid(0.7)).classification is Classification.TWO_BOUNCE_ONLY
        assert orbits.shortest_orbits(trapezoid(0.8)).classification is Classification.THREE_BOUNCE_ONLY

    def test_fagnano_leaves_when_cut_below_feet(self):
        assert orbits.three_bounce_orbits(trapezoid(0.4)) == []

    def test_both_at_switch(self):
        def gap(h):
            R = orbits.shortest_orbits(trapezoid(h))
            return R.three_bounce[0].length - 2 * h

        h = brentq(gap, 0.6, 0.85, xtol=1e-14)
        assert h == pytest.approx(0.75, abs=1e-9)
        R = orbits.shortest_orbits(trapezoid(0.75))
        assert R.classification is Classification.BOTH
        assert sorted(m.period for m in R.minimizers) == [2, 3]


class TestCrossChecks:
    def test_three_bounce_against_scalar(self, rng):
        for n in range(3, 13):
            P = geom.regular_polygon(n)
            assert {c.key() for c in orbits.three_bounce_orbits(P)} == scalar_three_bounce(P), n
        for _ in range(60):
            P = geom.random_convex_polygon(rng, int(rng.integers(3, 10)))
            assert {c.key() for c in orbits.three_bounce_orbits(P)} == scalar_three_bounce(P)

    def test_two_bounce_against_scalar(self, rng):
        for _ in range(100):
            P = geom.random_convex_polygon(rng, int(rng.integers(3, 12)))
            bands, two = orbits.two_bounce_orbits(P)
            lengths = [c.length for c in two] + [B.length for B in bands]
            assert min(lengths) == pytest.approx(scalar_two_bounce_min(P), abs=1e-12)
            assert min(lengths) == pytest.approx(2 * geom.width(P), abs=1e-12)

    def test_minimizers_are_regular_three_or_two_bounce(self, rng):
        for _ in range(100):
            R = orbits.shortest_orbits(geom.random_convex_polygon(rng, int(rng.integers(3, 12))))
            for c in R.minimizers:
                assert c.period in (2, 3)
                assert c.period == 2 or c.is_regular
                assert c.length == pytest.approx(R.ell, rel=1e-9)


class TestInvariants:
    def test_violations_detected(self, unit_square):
        bad = Orbit(np.array([[0.2, 0.0], [1.0, 0.7]]), (("e", 0), ("e", 1)),
                    (unit_square.edge_line(0), unit_square.edge_line(1)), kind="test")
        assert orbits.orbit_violations(unit_square, bad)
        inner = Orbit(np.array([[0.5, 0.5], [0.5, 1.0]]), (("e", 0), ("e", 2)),
                      (unit_square.edge_line(0), unit_square.edge_line(2)), kind="test")
        assert any("boundary" in s for s in orbits.orbit_violations(unit_square, inner))

    def test_hooks(self, equilateral):
        seen = []
        hook = lambda P, c: seen.append(c)  # noqa: E731
        orbits.add_orbit_hook(hook)
        try:
            orbits.shortest_orbits(equilateral)
        finally:
            orbits.remove_orbit_hook(hook)
        assert len(seen) >= 1
        n = len(seen)
        orbits.shortest_orbits(equilateral)
        assert len(seen) == n


# -- properties -----------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(polygons, st.floats(0.01, 100), st.floats(-10, 10), st.floats(-10, 10), st.floats(0, 2 * math.pi))
def test_similarity(P, r, tx, ty, phi):
    R = np.array([[math.cos(phi), -math.sin(phi)], [math.sin(phi), math.cos(phi)]])
    Q = geom.ConvexPolygon(r * P.vertices @ R.T + [tx, ty])
    a, b = orbits.shortest_orbits(P), orbits.shortest_orbits(Q)
    assert b.ell == pytest.approx(r * a.ell, rel=1e-9)
    assert len(b.three_bounce) == len(a.three_bounce)


@settings(max_examples=60, deadline=None)
@given(polygons)
def test_length_bounds(P):
    R = orbits.shortest_orbits(P)
    assert 4 * R.inradius <= R.ell * (1 + 1e-12)
    assert R.ell <= 2 * R.width * (1 + 1e-12)
    assert R.minimizers


@settings(max_examples=40, deadline=None)
@given(polygons, st.integers(0, 2**32 - 1))
def test_monotone_under_inclusion(P, seed):
    rng = np.random.default_rng(seed)
    extra = P.vertices.mean(axis=0) + rng.normal(size=(3, 2)) * P.diameter
    pts = np.vstack([P.vertices, extra])
    Q = geom.ConvexPolygon(pts[ConvexHull(pts).vertices])
    assert orbits.shortest_orbits(P).ell <= orbits.shortest_orbits(Q).ell * (1 + 1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8))
def test_symmetric_tables_two_bounce(seed, k):
    P = geom.random_symmetric_polygon(np.random.default_rng(seed), k)
    R = orbits.shortest_orbits(P)
    assert R.classification is Classification.TWO_BOUNCE_ONLY
    assert R.ell == pytest.approx(2 * R.width, rel=1e-12)
