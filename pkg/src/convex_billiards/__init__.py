"""Shortest closed billiard orbits on planar convex tables.

Exact algorithms for polygons (:mod:`.orbits`), certified brackets for
general convex bodies (:mod:`.approx`), a brute-force verifier
(:mod:`.oracle`) and billiards in symmetric normed planes
(:mod:`.minkowski`).
"""

from .errors import BilliardError, ConvergenceError, ValidationError
from .geom import ConvexPolygon, Line, Triangle, regular_polygon
from .orbits import (Classification, MinReport, Orbit, TwoBounceBand, classify_min, fagnano,
                     perturbation_ratio, shortest_orbits, three_bounce_orbits, two_bounce_orbits)

__version__ = "0.1.0"

__all__ = [
    "BilliardError", "ConvergenceError", "ValidationError",
    "ConvexPolygon", "Line", "Triangle", "regular_polygon",
    "Classification", "MinReport", "Orbit", "TwoBounceBand",
    "classify_min", "fagnano", "perturbation_ratio", "shortest_orbits",
    "three_bounce_orbits", "two_bounce_orbits",
]
