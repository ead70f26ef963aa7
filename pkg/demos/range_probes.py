"""Range behaviour near a singularity versus near a fixed point.

exp(1/z) on shrinking punctured annuli reaches essentially every complex
value once the annuli are sampled densely enough in the radial direction.
A plain escape map, probed on the way to infinity, attains exactly the
targets its image path crosses.
"""

from fatoulab.maps import Affine, Exp, Mobius, Var
from fatoulab.range_analysis import essential_singularity_probe, full_range_probe
from fatoulab.regions import disc

g = Exp(Mobius(0.0, 1.0, 1.0, 0.0))  # exp(1/z)
grid = (0.0, 1.0, -1.0, 1j, -1j, 2.0)

print("exp(1/z) coverage of a 6-value grid, tolerance 0.1")
print("radius   fraction  (rings_per_annulus=128)")
rep = essential_singularity_probe(
    g, 0.0, (0.5, 0.2, 0.1), grid, samples_per_ring=512, rings_per_annulus=128
)
for rho, frac in zip(rep.radii, rep.fractions):
    print(f"  {rho:4.2f}    {frac:.3f}")
print("never approached:", rep.omitted or "nothing")

print("\nsame radii with the default 3 rings per annulus:")
shallow = essential_singularity_probe(g, 0.0, (0.5, 0.2, 0.1), grid)
print("fractions", [round(f, 3) for f in shallow.fractions],
      "- the image spirals slip between 3 rings")

probe = full_range_probe(
    Affine(1.0, 2.0), Var(), None, 3.0, disc(0.0, 0.5), [4.2, 99.0], [0, 1, 2, 3]
)
print("\nescape probe for f(z) = z + 2, watching g(z) = z:")
for outcome in probe.outcomes:
    verdict = f"attained at n={outcome.witness_n}" if outcome.attained else "missed"
    print(f"  target {outcome.target}: {verdict}")
