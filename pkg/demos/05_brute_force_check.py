"""Checking the exact algorithm against brute force.

The oracle samples N points on the boundary, keeps the pairs and triples
that cannot be translated into the interior of the table and polishes the
shortest ones by coordinate descent.  It knows nothing about bands or
Fagnano triangles.
"""

import time

import numpy as np

from convex_billiards import geom, oracle, shortest_orbits

rng = np.random.default_rng(11)

# %% A single table in detail
P = geom.random_convex_polygon(rng, 6, unit_diameter=True)
A = shortest_orbits(P)
t = time.perf_counter()
B = oracle.brute_force_min(P, 720)
print(f"algorithm ell={A.ell:.9f} ({A.classification.value}); oracle ell={B.ell:.9f} "
      f"in {time.perf_counter() - t:.1f}s")
for C in B.minimizers:
    ok = any(oracle.config_matches(P, C, m, 1e-2) for m in A.minimizers)
    print(f"  oracle minimiser on edges {C.edges}, length {C.length:.9f}, matches algorithm: {ok}")

# %% What "stuck" means
# A configuration is stuck when no translation moves it into the open table;
# the shortest stuck configuration is a shortest orbit.
square = geom.ConvexPolygon([[0, 0], [1, 0], [1, 1], [0, 1]])
for q in ([[0.25, 0], [0.75, 0]], [[0.5, 0], [0.5, 1]]):
    print(q, "translatable:", oracle.can_translate_into_interior(square, q))

# %% Several random tables
worst = 0.0
for _ in range(10):
    P = geom.random_convex_polygon(rng, int(rng.integers(3, 9)), unit_diameter=True)
    worst = max(worst, abs(oracle.brute_force_min(P, 500).ell - shortest_orbits(P).ell))
print("\nlargest |oracle - algorithm| over 10 tables:", worst)
