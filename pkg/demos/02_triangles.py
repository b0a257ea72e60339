"""Triangles: Fagnano's orbit versus the shortest altitude.

An acute triangle's shortest orbit is the triangle of altitude feet; a right
or obtuse one bounces back and forth along the altitude from its largest
angle.  The second half shows why the Fagnano orbit survives small
perturbations of the table.
"""

import math

import numpy as np
from scipy.spatial import ConvexHull

from convex_billiards import Triangle, fagnano, geom, perturbation_ratio, shortest_orbits
from convex_billiards.orbits import reflection_residuals

rng = np.random.default_rng(3)

# %% The three cases
for name, pts in (("acute", [[0, 0], [1, 0], [0.4, 0.9]]),
                  ("right", [[0, 0], [3, 0], [0, 4]]),
                  ("obtuse", [[0, 0], [1, 0], [0.3, 0.2]])):
    D = Triangle(pts)
    R = shortest_orbits(D)
    (c,) = R.minimizers
    print(f"{name:7s} kind={D.kind:12s} ell={R.ell:.9f} 2*width={2 * R.width:.9f} orbit={c.kind}")

# %% Fagnano's orbit obeys the reflection law at every bounce
D = Triangle([[0, 0], [1, 0], [0.4, 0.9]])
F = fagnano(D)
print("\nFagnano feet:", np.round(F.bounce_points, 6).tolist())
print("largest reflection residual:", float(np.max(reflection_residuals(F))))

# %% Random triangles follow the rule
counts = {"acute": 0, "rectangular": 0, "obtuse": 0}
for _ in range(300):
    D = Triangle(rng.uniform(-1, 1, size=(3, 2)))
    R = shortest_orbits(D)
    counts[D.kind] += 1
    if D.kind == "acute":
        assert R.minimizers[0].period == 3 and abs(R.ell - fagnano(D).length) < 1e-9
    else:
        assert abs(R.ell - 2 * R.width) < 1e-9
print("\nchecked 300 random triangles:", counts)

# %% Stability under perturbation
# For the equilateral triangle 2 width / ell(Fagnano) = 2 sqrt(3) / 3.  Any
# table sandwiched between homothets r1 T and r2 T with r2 / r1 below that
# ratio still has only 3-bounce minimisers.
T = Triangle([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
rho = perturbation_ratio(T, fagnano(T))
print(f"\nperturbation ratio {rho:.12f}  (2 sqrt(3)/3 = {2 * math.sqrt(3) / 3:.12f})")
r, c = geom.inradius(T)
outer = c + 1.1 * (T.vertices - c)
for k in range(5):
    # a few random points of the outer homothet added to the hull of T
    u = rng.dirichlet(np.ones(3), size=4) @ outer
    X = np.vstack([T.vertices, u])
    Tp = geom.ConvexPolygon(X[ConvexHull(X).vertices])
    R = shortest_orbits(Tp)
    print(f"  T'{k}: {Tp.m} vertices, ell={R.ell:.6f}, class={R.classification.value}")
