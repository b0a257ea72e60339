"""Gauges, K-altitudes and shortest Minkowski billiard orbits."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from convex_billiards import geom, minkowski, oracle, orbits
from convex_billiards.errors import DegenerateSegment, GaugeError, PointOnLine
from convex_billiards.minkowski import Gauge
from convex_billiards.orbits import Classification

P4 = minkowski.lp(4)
GAUGES = [minkowski.disc(), minkowski.lp(1.5), P4, minkowski.lp(7), minkowski.ellipse(2.0, 0.7)]


def dense_altitude(K, v, L, span=10.0, n=2_000_001):
    """K-closest point of ``L`` to ``v`` by dense sampling around the Euclidean foot."""
    t0 = L.param(v)
    t = t0 + np.linspace(-span, span, n)
    d = K.norm(L.at(t) - v)
    k = int(np.argmin(d))
    return L.at(t[k]), float(d[k])


class TestGauges:
    def test_disc_length(self):
        assert minkowski.k_length(minkowski.disc(), [0, 0], [3, 4]) == pytest.approx(5.0, abs=1e-15)

    def test_p4_corner(self):
        # (1,1) leaves the unit 4-ball at scale 2^(1/4)
        assert float(P4.norm([1.0, 1.0])) == pytest.approx(2 ** 0.25, abs=1e-12)
        inside = lambda x: x[0] ** 4 + x[1] ** 4 <= 1  # noqa: E731
        assert minkowski.gauge_by_bisection(inside, [1.0, 1.0]) == pytest.approx(2 ** 0.25, abs=1e-12)

    def test_against_bisection(self, rng):
        bodies = [
            (P4, lambda x: x[0] ** 4 + x[1] ** 4 <= 1),
            (minkowski.lp(1.5), lambda x: abs(x[0]) ** 1.5 + abs(x[1]) ** 1.5 <= 1),
            (minkowski.ellipse(2.0, 0.7), lambda x: (x[0] / 2) ** 2 + (x[1] / 0.7) ** 2 <= 1),
        ]
        for K, inside in bodies:
            for v in rng.normal(size=(20, 2)) * 3:
                assert float(K.norm(v)) == pytest.approx(minkowski.gauge_by_bisection(inside, v), rel=1e-12)

    def test_large_p_no_overflow(self):
        K = minkowski.lp(300)
        assert float(K.norm([1e3, 1e3])) == pytest.approx(1e3 * 2 ** (1 / 300))

    @pytest.mark.parametrize("K", GAUGES, ids=lambda K: K.descriptor)
    def test_euler_relation(self, K, rng):
        v = rng.normal(size=(100, 2))
        assert np.allclose(np.einsum("ij,ij->i", K.gradient(v), v), K.norm(v), rtol=1e-12)

    def test_gradient_at_origin(self):
        assert np.array_equal(P4.gradient([[0.0, 0.0], [1.0, 0.0]]), [[0.0, 0.0], [1.0, 0.0]])

    def test_parse(self):
        assert minkowski.parse_gauge("disc").descriptor == "disc"
        assert minkowski.parse_gauge("lp:4").descriptor == "lp:4"
        assert minkowski.parse_gauge("ellipse:2,1").descriptor == "ellipse:2,1"

    @pytest.mark.parametrize("spec", ["lp:1", "lp:0.5", "lp:inf", "lp:x", "ellipse:0,1", "ellipse:1",
                                      "cube", "disc:2"])
    def test_parse_errors(self, spec):
        with pytest.raises(GaugeError):
            minkowski.parse_gauge(spec)

    def test_validation(self):
        hyp = lambda v: np.hypot(v[..., 0], v[..., 1])  # noqa: E731
        with pytest.raises(GaugeError):  # not symmetric
            Gauge(lambda v: hyp(v) + 0.5 * v[..., 0], lambda v: v)
        with pytest.raises(GaugeError):  # not strictly convex
            Gauge(lambda v: np.abs(v).max(axis=-1), lambda v: np.sign(v))
        with pytest.raises(GaugeError):  # wrong gradient
            Gauge(hyp, lambda v: 2 * v)
        with pytest.raises(GaugeError):  # not homogeneous
            Gauge(lambda v: hyp(v) ** 2, lambda v: 2 * v)
        Gauge(hyp, lambda v: v / hyp(v)[..., None])


class TestAltitudes:
    def test_disc_is_perpendicular(self, rng):
        K = minkowski.disc()
        for _ in range(20):
            L = geom.Line.with_direction(rng.normal(size=2), rng.normal(size=2))
            v = rng.normal(size=2) * 2
            assert np.allclose(minkowski.k_altitude(K, v, L), geom.foot_of_perpendicular(v, L), atol=1e-12)

    def test_p4_symmetric_cases(self):
        x_axis = geom.Line([0.0, 0.0], [1.0, 0.0])
        assert np.allclose(minkowski.k_altitude(P4, [0.3, 1.0], x_axis), [0.3, 0.0], atol=1e-12)
        diag = geom.Line.through([1.0, 0.0], [0.0, 1.0])
        assert np.allclose(minkowski.k_altitude(P4, [0.0, 0.0], diag), [0.5, 0.5], atol=1e-12)

    @pytest.mark.parametrize("K", GAUGES[1:], ids=lambda K: K.descriptor)
    def test_against_dense_sampling(self, K, rng):
        for _ in range(3):
            L = geom.Line.with_direction(rng.normal(size=2), rng.normal(size=2))
            v = rng.normal(size=2) * 2
            y = minkowski.k_altitude(K, v, L)
            _, d = dense_altitude(K, v, L)
            assert float(K.norm(y - v)) <= d + 1e-12
            assert float(K.norm(y - v)) == pytest.approx(d, abs=1e-9)

    def test_point_on_line(self):
        with pytest.raises(PointOnLine):
            minkowski.k_altitude(P4, [2.0, 0.0], geom.Line([0.0, 0.0], [1.0, 0.0]))

    @pytest.mark.parametrize("K", GAUGES, ids=lambda K: K.descriptor)
    def test_parallels_round_trip(self, K, rng):
        for _ in range(10):
            a, b = rng.normal(size=(2, 2))
            L1, L2 = minkowski.k_altitude_parallels(K, a, b)
            assert np.allclose(L1.direction, L2.direction)
            assert np.allclose(minkowski.k_altitude(K, b, L1), a, atol=1e-9)
            assert np.allclose(minkowski.k_altitude(K, a, L2), b, atol=1e-9)

    def test_degenerate_segment(self):
        with pytest.raises(DegenerateSegment):
            minkowski.k_altitude_parallels(P4, [1.0, 1.0], [1.0, 1.0])


def same_points(a, b, tol):
    """Equal as point sets, in any order."""
    d = np.linalg.norm(np.asarray(a)[:, None] - np.asarray(b)[None], axis=2)
    return len(a) == len(b) and d.min(axis=1).max() <= tol and d.min(axis=0).max() <= tol


class TestShortest:
    @pytest.mark.parametrize("n", range(3, 13))
    def test_disc_reduces_to_euclidean(self, n):
        P = geom.regular_polygon(n)
        E = orbits.shortest_orbits(P)
        M = minkowski.minkowski_shortest(P, minkowski.disc())
        assert M.ell == pytest.approx(E.ell, abs=1e-9)
        assert M.classification is E.classification
        assert len(M.minimizers) == len(E.minimizers)
        assert len(M.three_bounce) == len(E.three_bounce)
        for c in M.three_bounce:
            assert any(same_points(c.bounce_points, d.bounce_points, 1e-8) for d in E.three_bounce)

    def test_disc_random(self, rng):
        for _ in range(12):
            P = geom.random_convex_polygon(rng, int(rng.integers(3, 9)))
            M = minkowski.minkowski_shortest(P, minkowski.disc())
            assert M.ell == pytest.approx(orbits.shortest_orbits(P).ell, abs=1e-9)

    def test_ellipse_gauge_is_linear_image(self, rng):
        # the ellipse gauge is the Euclidean norm after scaling the axes
        a, b = 1.7, 0.6
        K = minkowski.ellipse(a, b)
        for _ in range(15):
            P = geom.random_convex_polygon(rng, int(rng.integers(3, 9)))
            Q = geom.ConvexPolygon(P.vertices / [a, b])
            M = minkowski.minkowski_shortest(P, K)
            E = orbits.shortest_orbits(Q)
            assert M.ell == pytest.approx(E.ell, rel=1e-9)
            assert M.classification is E.classification

    def test_unit_square_p4(self, unit_square):
        R = minkowski.minkowski_shortest(unit_square, P4)
        assert R.ell == pytest.approx(2.0, abs=1e-9)
        assert R.classification is Classification.TWO_BOUNCE_ONLY
        assert len(R.minimizers) == 2 and all(isinstance(m, minkowski.MinkowskiBand) for m in R.minimizers)
        assert R.gauge == "lp:4" and R.capacity == R.ell

    def test_right_triangle_p4(self):
        D = geom.Triangle([[0, 0], [3, 0], [0, 4]])
        R = minkowski.minkowski_shortest(D, P4)
        assert R.classification is Classification.TWO_BOUNCE_ONLY
        (c,) = R.minimizers
        assert c.kind == "vertex-edge" and np.allclose(c.bounce_points[0], [0, 0])
        hyp = D.edge_line(1)
        _, d = dense_altitude(P4, [0.0, 0.0], hyp, span=3.0)
        assert R.ell == pytest.approx(2 * d, abs=1e-9)
        B = oracle.brute_force_min(D, 720, metric=P4.norm)
        assert B.ell == pytest.approx(R.ell, abs=1e-3)

    def test_equilateral_p4_against_oracle(self, equilateral):
        R = minkowski.minkowski_shortest(equilateral, P4)
        assert R.classification is Classification.THREE_BOUNCE_ONLY
        B = oracle.brute_force_min(equilateral, 720, metric=P4.norm)
        assert B.ell == pytest.approx(R.ell, abs=1e-3)
        (c,) = R.minimizers
        # the p=4 length is flat to fourth order at the orbit, so a length
        # gap of 1e-6 allows positions some 3e-2 apart
        for C in B.minimizers:
            assert R.ell <= C.length + 1e-12
            assert oracle.config_matches(equilateral, C, c, 5e-2)
        # vertex altitudes are longer than the Fagnano orbit
        bands, two = minkowski.minkowski_two_bounce(equilateral, P4)
        assert min(o.k_length for o in two) > R.ell

    def test_point_reflection(self, rng):
        K = minkowski.lp(3)
        for _ in range(5):
            P = geom.random_convex_polygon(rng, int(rng.integers(3, 8)))
            a = minkowski.minkowski_shortest(P, K).ell
            assert minkowski.minkowski_shortest(geom.ConvexPolygon(-P.vertices), K).ell == pytest.approx(a, rel=1e-9)

    def test_full_mode_adds_vertex_pairs(self, unit_square):
        _, fast = minkowski.minkowski_two_bounce(unit_square, P4)
        _, full = minkowski.minkowski_two_bounce(unit_square, P4, full=True)
        assert fast == [] and len(full) == 2
        for c in full:
            assert c.k_length == pytest.approx(2 * 2 ** 0.25)


class TestFagnanoSearch:
    def test_disc_equilateral(self, equilateral):
        c = minkowski.minkowski_fagnano_search(equilateral, minkowski.disc())
        mids = 0.5 * (equilateral.vertices + np.roll(equilateral.vertices, -1, axis=0))
        assert np.allclose(c.bounce_points, mids, atol=1e-9)
        assert c.k_length == pytest.approx(1.5, abs=1e-12)

    def test_disc_matches_fagnano(self, rng):
        for _ in range(10):
            D = geom.Triangle(rng.uniform(size=(3, 2)) + [[0, 0], [1, 0], [0.5, 1]])
            c = minkowski.minkowski_fagnano_search(D, minkowski.disc(), rng=rng)
            if D.is_acute:
                assert np.allclose(c.bounce_points, orbits.fagnano(D).bounce_points, atol=1e-8)
            else:
                assert c is None

    def test_obtuse_and_right_none(self):
        assert minkowski.minkowski_fagnano_search(geom.Triangle([[0, 0], [4, 0], [1, 1]]), P4) is None
        assert minkowski.minkowski_fagnano_search(geom.Triangle([[0, 0], [3, 0], [0, 4]]),
                                                  minkowski.disc()) is None

    def test_p4_unique_from_starts(self, equilateral):
        rng = np.random.default_rng(1)
        found = [minkowski.minkowski_fagnano_search(equilateral, P4, rng=rng) for _ in range(5)]
        Q = np.array([c.bounce_points for c in found])
        assert np.max(np.abs(Q - Q[0])) <= 1e-6
        assert np.max(found[0].residuals) <= minkowski.TAU_REFL

    def test_start_validation(self, equilateral):
        with pytest.raises(ValueError):
            minkowski.minkowski_fagnano_search(equilateral, P4, start=[0.5, 1.5, 0.5])


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10))
def test_conformal_p4(seed, r):
    P = geom.random_convex_polygon(np.random.default_rng(seed), 5)
    a = minkowski.minkowski_shortest(P, P4).ell
    assert minkowski.minkowski_shortest(P.scaled(r), P4).ell == pytest.approx(r * a, rel=1e-9)


@settings(max_examples=12, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_orbit_reversal(seed):
    P = geom.random_convex_polygon(np.random.default_rng(seed), 5)
    for c in minkowski.minkowski_shortest(P, P4).minimizers:
        for o in getattr(c, "representatives", (c,)):
            q = o.bounce_points
            assert minkowski._k_closed_length(P4, q[::-1]) == pytest.approx(o.k_length, rel=1e-14)
