"""Second-generation p-values on interval nulls: a guided tour.

The SGPV of an interval estimate I against the interval null [-delta, delta]
is the fraction of I overlapping the null, with a correction that caps the
value of very wide (uninformative) intervals at 1/2.  Zero means the estimate
is incompatible with "effectively null" effects; one means it is fully
compatible; anything in between is inconclusive.

Run:  python3 demos/01_sgpv_basics.py
"""

import numpy as np

from prosgpv import IntervalNull, sgpv

null = IntervalNull(0.2)
print(f"Interval null: [-{null.delta}, {null.delta}]  (length {null.width})\n")

cases = [
    ((0.5, 1.5), "entirely above the null"),
    ((-0.1, 0.1), "entirely inside the null"),
    ((0.1, 0.9), "partial overlap, moderate width"),
    ((-1.0, 1.0), "partial overlap, very wide (correction active)"),
    ((0.19, 0.6), "barely touching the null"),
]
print(f"{'interval':>16}  {'sgpv':>6}  note")
for (l, u), note in cases:
    print(f"[{l:6.2f}, {u:6.2f}]  {sgpv((l, u), null):6.3f}  {note}")

# The screening rule used by the two-stage selector: a coefficient survives
# exactly when its 95% interval clears the null entirely, i.e. when
# |estimate| - 1.96*SE > delta.
print("\nSweep the interval midpoint and watch the SGPV hit exactly zero:")
half = 0.3
for mid in np.linspace(0.0, 0.8, 9):
    p = sgpv((mid - half, mid + half), null)
    marker = "  <- selected (sgpv == 0)" if p == 0 else ""
    print(f"midpoint {mid:4.1f}: sgpv = {p:5.3f}{marker}")
