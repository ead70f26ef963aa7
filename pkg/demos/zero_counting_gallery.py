"""Argument-principle zero counts, including the cases that bite.

The winding count doubles its boundary nodes whenever a phase jump is large
enough to hide a root between samples, and refuses outright when a root sits
on the contour itself.
"""

import numpy as np

from fatoulab.errors import BoundaryZero
from fatoulab.maps import Poly
from fatoulab.range_analysis import count_zeros
from fatoulab.regions import ClosedDisc

cubic = Poly((-1.0, 0.0, 0.0, 1.0))  # z^3 - 1
for center, radius in ((0.0, 2.0), (1.0, 0.5), (0.0, 0.5)):
    rep = count_zeros(cubic, ClosedDisc(center, radius), 1024)
    print(f"z^3 - 1 on D({center}, {radius}): {rep.count} zeros, "
          f"residual {rep.winding_residual:.2e}, nodes {rep.nodes_used}")

# a root screaming along just inside the boundary forces node doubling
delicate = Poly((-0.999999 * np.exp(1j * np.pi / 8), 1.0))
rep = count_zeros(delicate, ClosedDisc(0.0, 1.0), 8)
print(f"\nnear-boundary root: count {rep.count} after escalating to "
      f"{rep.nodes_used} nodes (started at 8)")

# an actual boundary root is a hard error, not a wrong answer
try:
    count_zeros(Poly((-1.0, 1.0)), ClosedDisc(0.0, 1.0), 256)
except BoundaryZero as exc:
    print("boundary root rejected:", exc)

# batch sanity: random polynomials with known roots
rng = np.random.default_rng(3)
mismatches = 0
for _ in range(200):
    k = int(rng.integers(1, 7))
    roots = 1.5 * np.sqrt(rng.random(k)) * np.exp(2j * np.pi * rng.random(k))
    if np.any(np.abs(np.abs(roots) - 1.0) < 0.03):
        continue
    p = Poly(tuple(np.poly(roots)[::-1]))
    got = count_zeros(p, ClosedDisc(0.0, 1.0), 512).count
    mismatches += got != int(np.sum(np.abs(roots) < 1.0))
print(f"\nrandom batch: {mismatches} mismatches out of 200")
