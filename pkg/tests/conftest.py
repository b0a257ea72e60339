"""Shared fixtures and the global orbit-invariant hook.

Every orbit returned by any operation passes through ``orbits._emit``; the
hook registered here re-checks it against the generalised reflection law
(Euclidean orbits) or the K-criticality conditions (Minkowski orbits) and
the test fails if any check failed while it ran.
"""

from __future__ import annotations

import numpy as np
import pytest

from convex_billiards import geom, orbits
from convex_billiards.minkowski import TAU_REFL, MinkowskiOrbit, minkowski_violations

HOOK_LOG = {"calls": 0, "violations": []}
ACCEPTANCE: dict = {}


def _check_orbit(P, c):
    HOOK_LOG["calls"] += 1
    if isinstance(c, MinkowskiOrbit):
        bad = minkowski_violations(P, c)
    else:
        bad = orbits.orbit_violations(P, c)
        res = orbits.reflection_residuals(c)
        for i, (site, r) in enumerate(zip(c.sites, res)):
            if site[0] == "e" and r > TAU_REFL:
                bad.append(f"bounce {i}: reflection residual {r:.3g}")
    if bad:
        HOOK_LOG["violations"].append((repr(c), bad))


orbits.add_orbit_hook(_check_orbit)


@pytest.fixture(autouse=True)
def orbit_invariants():
    HOOK_LOG["violations"].clear()
    yield
    found = list(HOOK_LOG["violations"])
    HOOK_LOG["violations"].clear()
    assert not found, f"orbit invariant violated: {found[:3]}"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_square():
    return geom.ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])


@pytest.fixture
def equilateral():
    return geom.Triangle([[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}")
