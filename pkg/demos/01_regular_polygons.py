"""Shortest billiard orbits on regular polygons.

Walks through the regular n-gons inscribed in the unit circle: which
orbits are shortest, how long they are, and how the answer alternates
between odd and even n.  Drawings land in ``demos/out/``.

Run with ``python demos/01_regular_polygons.py``.
"""

import math
from pathlib import Path

import numpy as np

from convex_billiards import geom, regular_polygon, shortest_orbits
from convex_billiards.report import from_min_report
from convex_billiards.svg import render_svg

OUT = Path(__file__).with_name("out")
OUT.mkdir(exist_ok=True)

# %% The table and its two basic measures
# Width is the smallest distance between parallel support lines, inradius
# the radius of the largest inscribed disc.  Every shortest orbit satisfies
# 4 r <= ell <= 2 w.
print(f"{'n':>3} {'width':>10} {'inradius':>10} {'ell':>10} {'class':>16}  minimisers")
for n in range(3, 13):
    P = regular_polygon(n)
    R = shortest_orbits(P)
    kinds = sorted({m.kind for m in R.minimizers})
    print(f"{n:>3} {R.width:10.6f} {R.inradius:10.6f} {R.ell:10.6f} {R.classification.value:>16}  "
          f"{len(R.minimizers)} x {', '.join(kinds)}")
    assert 4 * R.inradius <= R.ell + 1e-12 and R.ell <= 2 * R.width + 1e-12

# %% Odd n: singular orbits from the vertices
# A vertex bounces to the foot of the perpendicular on the opposite edge,
# so ell = 2(1 + cos(pi/n)) and the orbit is singular at the vertex.
R5 = shortest_orbits(regular_polygon(5))
print("\npentagon:", R5.ell, "expected", 2 * (1 + math.cos(math.pi / 5)))
for c in R5.minimizers:
    print("  ", c.kind, np.round(c.bounce_points, 4).tolist())

# %% Even n: bands between parallel edges
# Every chord perpendicular to two opposite edges is an orbit, so the
# minimisers come in bands of length 2 cos(pi/n) * 2.
R6 = shortest_orbits(regular_polygon(6))
print("\nhexagon:", R6.ell, "expected", 4 * math.cos(math.pi / 6))
for B in R6.minimizers:
    print("  ", B)

# %% Multiples of three also carry Fagnano-type triangles
# They are slightly longer than the bands, so they never win for n > 3,
# but the triangle always does.
for n in (3, 6, 9, 12):
    R = shortest_orbits(regular_polygon(n))
    lens = [round(c.length, 9) for c in R.three_bounce]
    print(f"n={n:2d}: {len(lens)} regular 3-bounce orbits of length {lens[0]}, "
          f"3 sqrt(3) cos(pi/n) = {3 * math.sqrt(3) * math.cos(math.pi / n):.9f}")

# %% Pictures
for n, R in ((5, R5), (6, R6), (3, shortest_orbits(regular_polygon(3)))):
    rep = from_min_report("min", {"table": f"ngon:{n}@unit-circle"}, R)
    (OUT / f"ngon{n}.svg").write_text(render_svg(rep))
print("\nwrote", sorted(p.name for p in OUT.glob("ngon*.svg")))

# %% Scale does not matter
# Orbits of a dilated table are dilated orbits.
P = geom.random_convex_polygon(np.random.default_rng(1), 7)
print("\nconformality:", shortest_orbits(P.scaled(3.0)).ell / shortest_orbits(P).ell)
