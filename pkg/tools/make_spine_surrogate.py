"""Generate the bundled surrogate lower-back-pain dataset.

The original study data (310 patients, 12 biomechanical attributes, 100
normal / 210 abnormal, UCI Machine Learning Repository) cannot be
redistributed from this build environment, so the package ships a seeded
synthetic surrogate with the same shape and the documented clinical
structure: pelvic geometry variables are strongly inter-correlated (pelvic
incidence is the sum of pelvic tilt and sacral slope), the degree of
spondylolisthesis and pelvic radius carry most of the class signal, and the
remaining six attributes are weakly informative noise.

Run from the repository root:

    python3 tools/make_spine_surrogate.py
"""

import hashlib
from pathlib import Path

import numpy as np
import pandas as pd

OUT = Path(__file__).resolve().parents[1] / "src" / "prosgpv" / "datasets" / "spine.csv"

N_NORMAL = 100
N_ABNORMAL = 210
SEED = 20210304


def simulate(rng):
    rows = []
    for label, count in (("normal", N_NORMAL), ("abnormal", N_ABNORMAL)):
        ab = label == "abnormal"
        sacral_slope = rng.normal(45 if ab else 38, 13 if ab else 8, count)
        pelvic_tilt = rng.normal(19 if ab else 13, 10 if ab else 6, count)
        pelvic_incidence = pelvic_tilt + sacral_slope
        lumbar_lordosis = 0.6 * pelvic_incidence + rng.normal(12, 9, count)
        pelvic_radius = rng.normal(112 if ab else 124, 14 if ab else 9, count)
        if ab:
            spondylolisthesis = rng.gamma(1.6, 24.0, count) - 4 + rng.normal(0, 4, count)
        else:
            spondylolisthesis = rng.normal(2, 6, count)
        rows.append(
            pd.DataFrame(
                {
                    "pelvic_incidence": pelvic_incidence,
                    "pelvic_tilt": pelvic_tilt,
                    "lumbar_lordosis_angle": lumbar_lordosis,
                    "sacral_slope": sacral_slope,
                    "pelvic_radius": pelvic_radius,
                    "degree_spondylolisthesis": spondylolisthesis,
                    "pelvic_slope": rng.uniform(0.0, 1.0, count),
                    "direct_tilt": rng.uniform(7.0, 37.0, count),
                    "thoracic_slope": rng.uniform(7.0, 20.0, count),
                    "cervical_tilt": rng.uniform(7.0, 17.0, count),
                    "sacrum_angle": rng.uniform(-35.0, 13.0, count),
                    "scoliosis_slope": rng.uniform(7.0, 44.0, count),
                    "class": label,
                }
            )
        )
    df = pd.concat(rows, ignore_index=True)
    # interleave classes so train/test splits stay balanced-ish
    return df.sample(frac=1.0, random_state=0).reset_index(drop=True)


def main():
    rng = np.random.default_rng(SEED)
    df = simulate(rng)
    OUT.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(OUT, index=False, float_format="%.6f")
    digest = hashlib.sha256(OUT.read_bytes()).hexdigest()
    print(f"wrote {OUT} ({len(df)} rows)")
    print(f"sha256: {digest}")


if __name__ == "__main__":
    main()
