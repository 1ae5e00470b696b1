"""How the choice of null bound shapes the selection trade-off.

The second-stage null bound delta is the selector's only real tuning knob.
This demo compares five variants on sparse logistic data: the default mean
standard error, inflated/deflated versions, a roughly-constant large bound,
and zero (which collapses the method to classical p-value screening).
Larger bounds suppress noise but lose weak signals; zero admits noise at a
steady rate and never becomes support-recovery consistent.

Run:  python3 demos/05_null_bound_variants.py
"""

from prosgpv.simulate import get_preset, null_bound_experiment

for n in (200, 800):
    sc = get_preset("logistic-low-s", n=n)
    res = null_bound_experiment(sc, replications=30, seed=4)
    print(f"n = {n}")
    print(f"{'variant':>22} {'capture':>8} {'power':>7} {'type1':>7}")
    for _, row in res.iterrows():
        print(f"{row['variant']:>22} {row['exact_capture']:8.2f} "
              f"{row['power']:7.2f} {row['type1']:7.3f}")
    print()

print("The default mean-SE bound dominates as n grows: the zero bound keeps "
      "a fixed false-positive rate, while heavily inflated bounds sacrifice "
      "power at small n.")
