"""Run the contraction trichotomy on three parameter families and dump traces.

Writes demos/out/trichotomy_traces.csv with one row per tracked pair so the
tail behaviour can be eyeballed in a spreadsheet.
"""

import csv
import math
from pathlib import Path

import numpy as np

from fatoulab.hyperbolic import BlaschkeSequence, classify_sequence
from fatoulab.maps import Mobius

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

HORIZON = 5000

n = np.arange(1, HORIZON + 1)

families = {
    "harmonic": BlaschkeSequence(tuple((1 - 1 / (n + 1)).astype(complex))),
    "geometric": BlaschkeSequence(
        tuple(np.minimum(1 - np.exp2(-n.astype(float)), np.nextafter(1.0, 0.0)).astype(complex))
    ),
}

golden = np.pi * (math.sqrt(5) - 1)
families["rotations"] = [
    Mobius(np.exp(1j * golden * k), 0.0, 0.0, 1.0) for k in range(1, HORIZON + 1)
]

rows = []
for name, seq in families.items():
    rep = classify_sequence(seq)
    line = f"{name:10s} -> {rep.verdict:22s} tail_sum={rep.tail_partial_sums[-1]:.4g}"
    if rep.verdict == "EventuallyIsometric":
        line += f" iso_from={rep.iso_from}"
    print(line)
    for i, trace in enumerate(rep.final_traces):
        rows.append([name, i, repr(trace)])

with open(OUT / "trichotomy_traces.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["family", "pair", "final_hyperbolic_distance"])
    writer.writerows(rows)

print("wrote", OUT / "trichotomy_traces.csv")
