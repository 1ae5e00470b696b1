"""Case study: selecting predictors of abnormal vertebral geometry.

Uses the bundled spine dataset (310 rows, 12 biomechanical attributes,
binary normal/abnormal outcome; see src/prosgpv/datasets/README inside the
package for provenance).  Repeated 70/30 train/test splits compare the
two-stage selector against cross-validated lasso on model size and test AUC:
the two-stage models are much smaller at essentially the same discrimination.

Run:  python3 demos/04_spine_case_study.py
"""

from collections import Counter

from prosgpv.cli import load_spine, spine_study

data = load_spine()
print(f"spine data: n={data.n}, p={data.p}, "
      f"{data.n - int(data.y.sum())} abnormal / {int(data.y.sum())} normal\n")

df, summary = spine_study(splits=50, seed=0, n_jobs=-1)
for method in ("prosgpv", "lasso_min"):
    s = summary[method]
    print(f"{method:>10}: median size {s['median_size']:.0f}, "
          f"median AUC {s['median_auc']:.3f}, "
          f"most frequent model {s['most_frequent_model']} "
          f"({s['most_frequent_count']}/50 splits)")

print("\nmodel-size distribution across splits:")
for method in ("prosgpv", "lasso_min"):
    sizes = Counter(df[df["method"] == method]["size"])
    line = ", ".join(f"{k}:{v}" for k, v in sorted(sizes.items()))
    print(f"{method:>10}: {line}")
