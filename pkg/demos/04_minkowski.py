"""Billiards in a normed plane.

Lengths are measured with the gauge of a symmetric strictly convex body K,
and the reflection law uses the gradient of that gauge.  The disc gauge
reproduces the Euclidean answer; the p-ball gauges bend it.
"""

import math

import numpy as np

from convex_billiards import geom, minkowski, regular_polygon, shortest_orbits

# %% The p = 4 gauge
K = minkowski.lp(4)
print("|(1, 1)|_4 =", float(K.norm([1.0, 1.0])), " 2^(1/4) =", 2 ** 0.25)

# %% Disc gauge equals Euclidean billiards
for n in (3, 4, 5, 6):
    P = regular_polygon(n)
    print(f"n={n}: disc gauge {minkowski.minkowski_shortest(P, minkowski.disc()).ell:.12f}  "
          f"euclidean {shortest_orbits(P).ell:.12f}")

# %% The unit square in the p-ball family
# Axis-parallel chords have the same length in every p-norm, so the bands
# stay shortest.
square = geom.ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
for p in (1.5, 3, 4, 8):
    R = minkowski.minkowski_shortest(square, minkowski.lp(p))
    print(f"square, p={p}: ell_K={R.ell:.9f} {R.classification.value}")

# %% The equilateral triangle
# The Fagnano search is a convex minimisation; random starts land on the
# same orbit.
T = geom.Triangle([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
rng = np.random.default_rng(0)
orbits = [minkowski.minkowski_fagnano_search(T, K, rng=rng) for _ in range(5)]
spread = max(np.abs(o.bounce_points - orbits[0].bounce_points).max() for o in orbits)
print(f"\np=4 Fagnano orbit of the triangle: K-length {orbits[0].k_length:.9f}, spread over starts {spread:.1e}")
for p in (1.5, 2, 3, 4, 8):
    R = minkowski.minkowski_shortest(T, minkowski.lp(p))
    print(f"triangle, p={p}: ell_K={R.ell:.9f} {R.classification.value}")

# %% An ellipse gauge is a linear change of coordinates
P = geom.random_convex_polygon(np.random.default_rng(5), 6)
a, b = 1.7, 0.6
print("\nellipse gauge:", minkowski.minkowski_shortest(P, minkowski.ellipse(a, b)).ell,
      " euclidean on the scaled table:", shortest_orbits(geom.ConvexPolygon(P.vertices / [a, b])).ell)
