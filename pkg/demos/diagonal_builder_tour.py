"""Stack three approximation jobs onto one polynomial with the diagonal builder.

Each stage k picks a later landing window f^{n_k}(L), fixes the defect left by
the previous stages there, and pins a guard disc so earlier work is not
disturbed. Afterwards the orbit itself tells us where each target lives, and
a winding count certifies the target values are genuinely attained.
"""

from fatoulab.maps import Affine
from fatoulab.range_analysis import full_range_probe
from fatoulab.regions import disc
from fatoulab.universality import build_partial_universal, orbit_density

f = Affine(1.0, 2.0)
L = disc(0.0, 0.5)
values = (0.0, 1.0, 1j)
tasks = [(L, Affine(1.0, c)) for c in values]

rec = build_partial_universal(f, tasks, 0.15, boundary_n=384, degree_cap=96)

print("stage  window n_k  guard R  final error   budget")
for k, stage in enumerate(rec.stages):
    print(f"  {k}      {rec.witness_indices[k]:3d}      {rec.guard_radii[k]:6.2f} "
          f"  {rec.final_errors[k]:.3e}   {2 * 0.15 / 2 ** (k + 1):.3e}")

density = orbit_density(f, rec.polynomial, tasks, max(rec.witness_indices) + 2)
print("\norbit density recovery:",
      [(r.best_n, round(r.best_error, 6)) for r in density])

probe = full_range_probe(f, rec.polynomial, None, 5.0, L, list(values),
                         list(rec.witness_indices))
print("\nvalue  attained  at n  zeros inside")
for outcome in probe.outcomes:
    print(f"{outcome.target!s:6s}   {str(outcome.attained):5s}  {outcome.witness_n:3d}"
          f"    {outcome.count}")
