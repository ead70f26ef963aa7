"""Two small set pieces for the weighted operator.

First: with f(z) = z + 1 and weight w(z) = z, the weighted orbit of the
constant 1 at the point 1 is exactly the factorials. Second: polynomials
integrate to zero around the unit circle while 1/(z - a) does not, which is
the obstruction that rules out cyclic vectors built from polynomial
candidates.
"""

import math

import numpy as np

from fatoulab.maps import Affine, Const, Poly, Var
from fatoulab.regions import Contour
from fatoulab.universality import cyclicity_obstruction, weighted_orbit

rec = weighted_orbit(Affine(1.0, 1.0), Var(), Const(1.0), 1.0, 10)
print(" n   W^n(1)    n!")
exact = True
for n, value in enumerate(rec.values):
    fact = math.factorial(n)
    exact &= value == float(fact)
    print(f"{n:2d}  {value.real:9.0f}  {fact}")
print("bit exact:", exact)

contour = Contour(0.0, 1.0, node_count=512)
print("\n k   |integral of z^k|      |witness - 2 pi i|")
for k in (0, 3, 7, 10):
    rep = cyclicity_obstruction(Poly((0.0,) * k + (1.0,)), contour, 0.0)
    print(f"{k:2d}   {abs(rep.candidate_integral):.3e}          "
          f"{abs(rep.witness_integral - 2j * np.pi):.3e}")
