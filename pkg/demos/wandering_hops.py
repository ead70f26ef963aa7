"""Watch an orbit hop along the translated-disc model of a wandering domain.

The model places one closed disc per step, three units apart, and conjugates
a quadratic Blaschke factor into each. Points never return to an earlier
disc; they just march right.
"""

from fatoulab.hyperbolic import (
    WanderingModel,
    build_noninjective_sequence,
    disc_exhaustion,
)
from fatoulab.maps import Mobius, Pow

STEPS = 12

b = Pow(Mobius(1.0, 1 / 3, 1 / 3, 1.0), 2)
model = WanderingModel(
    factors=(b,) * STEPS,
    translations=tuple(3.0 * k for k in range(STEPS + 1)),
)

from fatoulab.hyperbolic import model_orbit

for z0 in (0.0, 0.2 + 0.1j, -0.4j):
    orbit = model_orbit(model, z0, STEPS)
    cells = " ".join(f"{z.real:6.2f}{z.imag:+.2f}i" for z in orbit[:6])
    print(f"start {z0!s:12s} first hops: {cells} ...")
    print(f"  final |z - 3*{STEPS}| = {abs(orbit[-1] - 3.0 * STEPS):.3f}")

# the greedy collision chain that makes the composition non-injective
cons = build_noninjective_sequence(disc_exhaustion(30), 30)
print(f"\ncollision chain: {len(cons.sequence)} factors, "
      f"{len(cons.steps)} engineered critical hits, "
      f"{len(cons.skips)} origin-centred skips")
step = cons.steps[0]
print("first hit: factor", step.factor_index, "kills the derivative at",
      f"{step.target:.6g}")
