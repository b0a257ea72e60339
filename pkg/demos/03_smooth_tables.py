"""Smooth tables: certified brackets from inscribed polygons.

For a convex body B we inscribe a polygon T whose dilation about a centre
covers B; monotonicity and scaling of ell then give
ell(T) <= ell(B) <= (1 + eps) ell(T).
"""

import numpy as np

from convex_billiards import approx

# %% The unit disc: ell = 4, the diameter bounced twice
for eps in (1e-1, 1e-2, 1e-3, 1e-4):
    I = approx.ell_interval(approx.disc(), eps)
    print(f"eps={eps:7.0e}  {I.polygon.m:4d}-gon  [{I.lower:.8f}, {I.upper:.8f}]  contains 4: {4.0 in I}")

# %% Bounce points approach the boundary of the disc
I = approx.ell_interval(approx.disc(), 1e-3)
pts = np.vstack([c.bounce_points for m in I.report.minimizers for c in getattr(m, "representatives", (m,))])
print("\nlargest boundary distance of bounce points:", float(approx.boundary_distance(approx.disc(), pts).max()))

# %% Ellipse with semi-axes 2 and 1: the minor axis, bounced twice
for eps in (1e-2, 1e-3):
    I = approx.ell_interval(approx.ellipse(2.0, 1.0), eps)
    print(f"ellipse eps={eps:.0e}: [{I.lower:.8f}, {I.upper:.8f}]")

# %% A lens, intersection of two unit discs with centres 1 apart
# Its width is 1 and its inradius 1/2, so the bounds pin ell to 2.
I = approx.ell_interval(approx.disc_polygon([[-0.5, 0], [0.5, 0]], [1, 1]), 1e-3)
print(f"\nlens: [{I.lower:.8f}, {I.upper:.8f}]")

# %% Centrally symmetric polygons and their thickenings
H = approx.geom.regular_polygon(6)
print("\nhexagon sandwich at r=1.05:", approx.symmetric_sandwich_estimate(H, 1.05))
