"""Escape-time portrait of z^2 + c next to the disc attractor of a Blaschke square.

Writes demos/out/escape.pgm (P5, viewable almost anywhere). If matplotlib is
around we also save a PNG, but nothing here requires it.
"""

from pathlib import Path

import numpy as np

from fatoulab.dynamics import denjoy_wolff, escape_render, write_pgm
from fatoulab.maps import Mobius, Poly, Pow

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

c = -0.8 + 0.156j
f = Poly((c, 0.0, 1.0))
counts = escape_render(f, (-1.6, -1.0, 1.6, 1.0), (480, 300), 60, 2.0)
write_pgm(OUT / "escape.pgm", counts, 60)
print("escape grid", counts.shape, "iterations capped at 60")
print("wrote", OUT / "escape.pgm")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.figure(figsize=(8, 5))
    plt.imshow(counts, cmap="magma", origin="lower", extent=(-1.6, 1.6, -1.0, 1.0))
    plt.colorbar(label="escape iteration")
    plt.tight_layout()
    plt.savefig(OUT / "escape.png", dpi=120)
    print("wrote", OUT / "escape.png")
except ImportError:
    print("matplotlib not installed, skipping the PNG")

b = Pow(Mobius(1.0, 0.5, 0.5, 1.0), 2)
est = denjoy_wolff(b)
print(f"\ndisc attractor of the Blaschke square: {est.point:.8f} "
      f"(boundary={est.boundary_flag}, {est.iterations_used} iterations)")
