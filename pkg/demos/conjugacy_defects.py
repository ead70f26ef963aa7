"""How fast the linearizing coordinates converge as the tower deepens."""

import numpy as np

from fatoulab.dynamics import boettcher, koenigs
from fatoulab.maps import Poly

attracting = Poly((0.0, 0.5, 0.1))      # z/2 + z^2/10
superattracting = Poly((0.0, 0.0, 1.0, 1.0))  # z^2 + z^3

circle = lambda r, n=48: r * np.exp(2j * np.pi * np.arange(n) / n)


def worst_defect(conj, radii):
    return max(conj.defect(complex(z)) for r in radii for z in circle(r))


print("koenigs tower for z/2 + z^2/10 on |z| <= 0.1")
print(" depth   worst defect")
for depth in (5, 10, 20, 40):
    conj = koenigs(attracting, 0.0, depth)
    print(f"  {depth:4d}   {worst_defect(conj, (0.1, 0.05)):.3e}")

print("\nboettcher tower for z^2 + z^3 on |z| <= 0.05")
print(" depth   worst defect")
for depth in (5, 10, 20):
    conj = boettcher(superattracting, 0.0, depth)
    print(f"  {depth:4d}   {worst_defect(conj, (0.05, 0.025)):.3e}")

conj = koenigs(attracting, 0.0, 40)
print(f"\nmultiplier recovered by the deep tower: {conj.multiplier:.12f}")
