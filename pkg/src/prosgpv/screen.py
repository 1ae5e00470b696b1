"""Second-generation p-values, null bounds, and the two-stage selector.

Stage one finds a candidate set from the l1 path at the GIC-optimal penalty;
stage two refits without penalty, builds an interval null from the mean
(optionally GVIF-deflated) coefficient standard error, and keeps the
variables whose 95% intervals are fully incompatible with the null region.
The final coefficients are an unpenalized refit on the surviving set, so
they carry no shrinkage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .families import get_family
from .fitting import Z_95, FitOptions, FitResult, fit_firth_logistic, fit_mle, gvif
from .lasso import LassoPath, select_lambda_gic, solve_path

__all__ = [
    "IntervalNull",
    "ProSGPVConfig",
    "SelectionResult",
    "sgpv",
    "null_bound_se",
    "null_bound_gvif",
    "prosgpv",
]


@dataclass(frozen=True)
class IntervalNull:
    """Symmetric interval null [-delta, +delta] of practically-nil effects."""

    delta: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("null bound half-width must be positive")

    @property
    def interval(self) -> tuple[float, float]:
        return (-self.delta, self.delta)

    @property
    def width(self) -> float:
        return 2.0 * self.delta


@dataclass(frozen=True)
class ProSGPVConfig:
    """The selector's three knobs: null-bound flavor, Jeffreys refits, grid."""

    bound: str = "constant"          # "constant" or "gvif"
    jeffreys: bool = False           # logistic stage-two refits only
    grid_size: int = 100
    lambda_ratio: float | None = None

    def __post_init__(self):
        if self.bound not in ("constant", "gvif"):
            raise ValueError("bound must be 'constant' or 'gvif'")


@dataclass
class SelectionResult:
    family: str
    candidate_set: tuple[int, ...]
    final_set: tuple[int, ...]
    coef: np.ndarray                         # refit on final set, zeros elsewhere
    sgpvs: dict[int, float]                  # per candidate variable
    null_bound: IntervalNull | None
    per_variable_cutoffs: dict[int, float]   # 1.96*SE_k + delta
    stage1: LassoPath
    stage2_fit: FitResult
    final_fit: FitResult

    @property
    def beta(self) -> np.ndarray:
        return self.coef if self.family == "cox" else self.coef[1:]


def sgpv(interval, null: IntervalNull) -> float:
    """Fraction of the interval estimate overlapping the null region,
    with the wide-interval correction capping inconclusive data.

    A degenerate point interval returns 1 if the point lies in the null
    region, else 0.
    """
    l, u = float(interval[0]), float(interval[1])
    if l > u:
        raise ValueError(f"malformed interval [{l}, {u}]")
    if not (np.isfinite(l) and np.isfinite(u)):
        raise ValueError("interval bounds must be finite")
    length = u - l
    if length == 0.0:
        return 1.0 if -null.delta <= l <= null.delta else 0.0
    overlap = max(0.0, min(u, null.delta) - max(l, -null.delta))
    correction = max(length / (2.0 * null.width), 1.0)
    return min(overlap / length * correction, 1.0)


def null_bound_se(stage2: FitResult, candidate_set) -> IntervalNull:
    """delta = mean coefficient SE over the candidate set (intercept excluded)."""
    candidate_set = tuple(candidate_set)
    if len(candidate_set) == 0:
        raise ValueError("candidate set is empty")
    se = stage2.beta_se()[list(candidate_set)]
    return IntervalNull(float(np.mean(se)))


def null_bound_gvif(stage2: FitResult, data: Dataset, candidate_set) -> IntervalNull:
    """delta = mean of SE_k / GVIF_k; equals the constant bound when all
    candidate columns are mutually uncorrelated."""
    candidate_set = tuple(candidate_set)
    if len(candidate_set) == 0:
        raise ValueError("candidate set is empty")
    se = stage2.beta_se()[list(candidate_set)]
    g = gvif(data, candidate_set)
    return IntervalNull(float(np.mean(se / g)))


def _stage2_fit(family, data, subset, config) -> FitResult:
    if config.jeffreys and family.kind == "logistic":
        return fit_firth_logistic(data, subset)
    return fit_mle(family, data, subset)


def prosgpv(family, data: Dataset, config: ProSGPVConfig | None = None) -> SelectionResult:
    """Run both stages and return the assembled selection result.

    An empty candidate or final set yields the intercept-only (or null Cox)
    model rather than an error.
    """
    family = get_family(family)
    config = config or ProSGPVConfig()

    path = solve_path(family, data, grid_size=config.grid_size,
                      lambda_ratio=config.lambda_ratio)
    _, candidate = select_lambda_gic(path)

    if len(candidate) == 0:
        null_fit = _stage2_fit(family, data, (), config)
        return SelectionResult(
            family=family.kind,
            candidate_set=(),
            final_set=(),
            coef=null_fit.coef.copy(),
            sgpvs={},
            null_bound=None,
            per_variable_cutoffs={},
            stage1=path,
            stage2_fit=null_fit,
            final_fit=null_fit,
        )

    stage2 = _stage2_fit(family, data, candidate, config)
    if config.bound == "gvif" and len(candidate) >= 2:
        bound = null_bound_gvif(stage2, data, candidate)
    else:
        bound = null_bound_se(stage2, candidate)

    beta = stage2.beta()
    se = stage2.beta_se()
    sgpvs = {}
    cutoffs = {}
    for k in candidate:
        interval = (beta[k] - Z_95 * se[k], beta[k] + Z_95 * se[k])
        sgpvs[k] = sgpv(interval, bound)
        cutoffs[k] = Z_95 * se[k] + bound.delta
    final = tuple(sorted(k for k in candidate if sgpvs[k] == 0.0))

    final_fit = _stage2_fit(family, data, final, config) if final != candidate else stage2
    if final != candidate and len(final) == 0:
        final_fit = _stage2_fit(family, data, (), config)

    return SelectionResult(
        family=family.kind,
        candidate_set=tuple(sorted(candidate)),
        final_set=final,
        coef=final_fit.coef.copy(),
        sgpvs=sgpvs,
        null_bound=bound,
        per_variable_cutoffs=cutoffs,
        stage1=path,
        stage2_fit=stage2,
        final_fit=final_fit,
    )
