"""Two-stage variable selection with second-generation p-values for
logistic, Poisson, and Cox regression."""

from .data import DataError, Dataset, make_dataset
from .families import (
    CoxFamily,
    EvaluationOverflowError,
    Family,
    LogisticFamily,
    PoissonFamily,
    get_family,
    gradient,
    hessian,
    loss,
)
from .fitting import (
    CollinearityError,
    FitOptions,
    FitResult,
    RankDeficiencyError,
    fit_firth_logistic,
    fit_mle,
    gvif,
)
from .lasso import (
    LassoPath,
    PathError,
    gic,
    select_lambda_cv,
    select_lambda_gic,
    solve_path,
)
from .screen import (
    IntervalNull,
    ProSGPVConfig,
    SelectionResult,
    null_bound_gvif,
    null_bound_se,
    prosgpv,
    sgpv,
)
from .simulate import (
    PRESETS,
    MetricsRecord,
    Scenario,
    compute_metrics,
    draw_design,
    draw_response,
    make_data,
    make_true_beta,
    run_grid,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "DataError", "make_dataset",
    "Family", "LogisticFamily", "PoissonFamily", "CoxFamily", "get_family",
    "loss", "gradient", "hessian", "EvaluationOverflowError",
    "FitOptions", "FitResult", "fit_mle", "fit_firth_logistic", "gvif",
    "RankDeficiencyError", "CollinearityError",
    "LassoPath", "PathError", "solve_path", "gic",
    "select_lambda_gic", "select_lambda_cv",
    "IntervalNull", "ProSGPVConfig", "SelectionResult",
    "sgpv", "null_bound_se", "null_bound_gvif", "prosgpv",
    "Scenario", "MetricsRecord", "PRESETS", "make_true_beta", "draw_design",
    "draw_response", "make_data", "compute_metrics", "run_grid",
]
