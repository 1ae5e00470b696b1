"""Unpenalized fitting: Newton/IRLS, Firth-penalized logistic, Wald inference.

``fit_mle`` restricts the model to a subset of predictor columns and reports
full-length coefficient vectors with structural zeros outside the subset.
Standard errors come from the inverse observed information at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve, qr

from .data import Dataset
from .families import Family, LogisticFamily, get_family

__all__ = [
    "FitOptions",
    "FitResult",
    "RankDeficiencyError",
    "CollinearityError",
    "fit_mle",
    "fit_firth_logistic",
    "gvif",
]

Z_95 = 1.96  # fixed 95% Wald multiplier


class RankDeficiencyError(np.linalg.LinAlgError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(f"information matrix singular; offending columns {self.columns}")


class CollinearityError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class FitOptions:
    max_iter: int = 100
    tol: float = 1e-8
    jeffreys: bool = False

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass
class FitResult:
    """One converged (or flagged) restricted fit with Wald inference.

    Arrays are full-length over intercept (GLM only) plus all p predictors;
    entries outside the fitted subset are 0 for ``coef`` and NaN for ``se``
    and the CI bounds.
    """

    family: str
    coef: np.ndarray
    se: np.ndarray
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    converged: bool
    iterations: int
    final_loss: float
    subset: tuple[int, ...]
    warnings: list[str] = field(default_factory=list)

    @property
    def intercept(self) -> float:
        return float(self.coef[0]) if self.family != "cox" else 0.0

    def beta(self) -> np.ndarray:
        """Predictor coefficients without the intercept slot."""
        return self.coef if self.family == "cox" else self.coef[1:]

    def beta_se(self) -> np.ndarray:
        return self.se if self.family == "cox" else self.se[1:]


def _sub_dataset(data: Dataset, subset) -> Dataset:
    return Dataset(
        X=np.ascontiguousarray(data.subset_columns(subset)),
        y=data.y,
        time=data.time,
        status=data.status,
        standardized=data.standardized,
    )


def _offending_columns(Z, subset, has_intercept):
    """Identify columns responsible for rank deficiency via pivoted QR."""
    _, R, piv = qr(Z, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    thresh = max(Z.shape) * np.finfo(float).eps * (d[0] if d.size else 1.0)
    bad_local = piv[np.sum(d > thresh):]
    out = []
    for j in bad_local:
        if has_intercept:
            out.append("intercept" if j == 0 else int(subset[j - 1]))
        else:
            out.append(int(subset[j]))
    return out


def _start_coef(family: Family, data: Dataset, q: int):
    coef = np.zeros(family.n_coef(q))
    if family.has_intercept:
        coef[0] = family.null_intercept(data)
    return coef


def _newton(family: Family, data: Dataset, subset, options: FitOptions):
    """Newton iterations with step halving; returns (coef, hess, iters, conv)."""
    q = len(subset)
    coef = _start_coef(family, data, q)
    cur_loss = family.loss(data, coef)
    converged = False
    it = 0
    hess = family.hessian(data, coef)
    for it in range(1, options.max_iter + 1):
        grad = family.gradient(data, coef)
        hess = family.hessian(data, coef)
        if np.max(np.abs(grad)) < 1e-8:
            converged = True
            break
        try:
            c, low = cho_factor(hess + 1e-12 * np.eye(hess.shape[0]))
            step = cho_solve((c, low), grad)
        except np.linalg.LinAlgError:
            raise RankDeficiencyError(
                _offending_columns(_design(family, data), subset, family.has_intercept)
            )
        new_loss = np.inf
        scale = 1.0
        for _ in range(30):
            trial = coef - scale * step
            try:
                new_loss = family.loss(data, trial)
            except FloatingPointError:
                new_loss = np.inf
            if new_loss <= cur_loss:
                break
            scale *= 0.5
        if not np.isfinite(new_loss):
            break
        rel = abs(cur_loss - new_loss) / max(abs(cur_loss), 1e-12)
        coef = coef - scale * step
        cur_loss = new_loss
        if rel < options.tol:
            converged = True
            hess = family.hessian(data, coef)
            break
    return coef, hess, it, converged, cur_loss


def _design(family, data):
    if family.has_intercept:
        return np.column_stack([np.ones(data.n), data.X])
    return data.X


def _expand(family: Family, p: int, subset, sub_coef, sub_se):
    m = family.n_coef(p)
    coef = np.zeros(m)
    se = np.full(m, np.nan)
    off = 1 if family.has_intercept else 0
    if family.has_intercept:
        coef[0] = sub_coef[0]
        se[0] = sub_se[0]
    for k, j in enumerate(subset):
        coef[off + j] = sub_coef[off + k]
        se[off + j] = sub_se[off + k]
    return coef, se


def _column_sds(data: Dataset):
    if data.standardized:
        return np.ones(data.p)
    return data.X.std(axis=0)


def fit_mle(family, data: Dataset, subset=None, options: FitOptions | None = None) -> FitResult:
    """Maximum-likelihood fit restricted to ``subset`` predictor columns.

    ``subset=None`` fits all columns; an empty subset gives the intercept-only
    (or null Cox) model.  With ``options.jeffreys`` set and a logistic family,
    delegates to :func:`fit_firth_logistic`.
    """
    family = get_family(family)
    options = options or FitOptions()
    subset = _normalize_subset(subset, data)
    if options.jeffreys:
        if family.kind != "logistic":
            raise ValueError("jeffreys penalty is only defined for logistic models")
        return fit_firth_logistic(data, subset, options)
    if len(subset) > data.n - 2:
        raise ValueError(f"subset size {len(subset)} exceeds n-2 = {data.n - 2}")

    sub = _sub_dataset(data, subset)
    if family.kind == "cox" and len(subset) == 0:
        null_loss = family.loss(sub, np.zeros(0))
        nan = np.full(data.p, np.nan)
        return FitResult("cox", np.zeros(data.p), nan, nan.copy(), nan.copy(),
                         True, 0, float(null_loss), subset)

    sub_coef, hess, iters, converged, final_loss = _newton(family, sub, subset, options)

    info = sub.n * hess
    try:
        c, low = cho_factor(info)
        inv_diag = np.diag(cho_solve((c, low), np.eye(info.shape[0])))
    except np.linalg.LinAlgError:
        raise RankDeficiencyError(
            _offending_columns(_design(family, sub), subset, family.has_intercept)
        )
    if np.any(inv_diag <= 0):
        raise RankDeficiencyError(
            _offending_columns(_design(family, sub), subset, family.has_intercept)
        )
    sub_se = np.sqrt(inv_diag)

    warnings_list = []
    if family.kind == "logistic" and len(subset) > 0:
        sds = _column_sds(data)[list(subset)]
        std_beta = sub_coef[1:] * sds
        score = family.gradient(sub, sub_coef)
        if np.any(np.abs(std_beta) > 15) and np.max(np.abs(score)) > 1e-12:
            warnings_list.append("possible separation")

    coef, se = _expand(family, data.p, subset, sub_coef, sub_se)
    return FitResult(
        family=family.kind,
        coef=coef,
        se=se,
        ci_lower=coef - Z_95 * se,
        ci_upper=coef + Z_95 * se,
        converged=converged,
        iterations=iters,
        final_loss=float(final_loss),
        subset=subset,
        warnings=warnings_list,
    )


def fit_firth_logistic(data: Dataset, subset=None, options: FitOptions | None = None) -> FitResult:
    """Logistic fit with the Jeffreys-prior (Firth) penalty.

    Maximizes loglik + (1/2) log det(information) via IRLS with hat-value
    adjusted scores; estimates stay finite under complete separation.
    """
    options = options or FitOptions()
    subset = _normalize_subset(subset, data)
    family = LogisticFamily()
    sub = _sub_dataset(data, subset)
    Z = _design(family, sub)
    n, q = Z.shape
    y = sub.y

    coef = np.zeros(q)
    coef[0] = family.null_intercept(sub)
    converged = False
    it = 0
    info = np.eye(q)
    for it in range(1, options.max_iter + 1):
        eta = Z @ coef
        mu = family.mean(eta)
        w = np.maximum(mu * (1 - mu), 1e-12)
        Wh = np.sqrt(w)[:, None] * Z
        info = Wh.T @ Wh
        try:
            c, low = cho_factor(info)
        except np.linalg.LinAlgError:
            raise RankDeficiencyError(_offending_columns(Z, subset, True))
        # hat values of the weighted design
        half = cho_solve((c, low), Wh.T)
        h = np.einsum("ij,ji->i", Wh, half)
        score = Z.T @ (y - mu + h * (0.5 - mu))
        if np.max(np.abs(score)) < 1e-8:
            converged = True
            break
        step = cho_solve((c, low), score)
        cur = _firth_objective(y, eta, info)
        scale = 1.0
        for _ in range(30):
            trial = coef + scale * step
            eta_t = Z @ trial
            mu_t = family.mean(eta_t)
            w_t = np.maximum(mu_t * (1 - mu_t), 1e-12)
            info_t = (np.sqrt(w_t)[:, None] * Z).T @ (np.sqrt(w_t)[:, None] * Z)
            if _firth_objective(y, eta_t, info_t) >= cur:
                break
            scale *= 0.5
        new = coef + scale * step
        if np.max(np.abs(new - coef)) < options.tol * 10:
            coef = new
            converged = True
            break
        coef = new

    # refresh information at the final estimate
    eta = Z @ coef
    mu = family.mean(eta)
    w = np.maximum(mu * (1 - mu), 1e-12)
    info = (np.sqrt(w)[:, None] * Z).T @ (np.sqrt(w)[:, None] * Z)
    c, low = cho_factor(info)
    sub_se = np.sqrt(np.diag(cho_solve((c, low), np.eye(q))))

    full_coef, full_se = _expand(family, data.p, subset, coef, sub_se)
    final_loss = family.loss(sub, coef)
    return FitResult(
        family="logistic",
        coef=full_coef,
        se=full_se,
        ci_lower=full_coef - Z_95 * full_se,
        ci_upper=full_coef + Z_95 * full_se,
        converged=converged,
        iterations=it,
        final_loss=float(final_loss),
        subset=subset,
    )


def _firth_objective(y, eta, info):
    loglik = float(np.sum(y * eta - np.logaddexp(0.0, eta)))
    sign, logdet = np.linalg.slogdet(info)
    if sign <= 0:
        return -np.inf
    return loglik + 0.5 * logdet


def gvif(data: Dataset, subset) -> np.ndarray:
    """Generalized variance inflation factors for the subset columns.

    Diagonal of the inverse correlation matrix; reduces to the classical
    VIF 1/(1-R^2_j) for single-column terms.  A single-element subset
    returns [1.0].
    """
    subset = _normalize_subset(subset, data)
    if len(subset) == 0:
        raise ValueError("gvif requires a nonempty subset")
    if len(subset) == 1:
        return np.array([1.0])
    Xs = data.subset_columns(subset)
    R = np.corrcoef(Xs, rowvar=False)
    try:
        c, low = cho_factor(R)
        inv = cho_solve((c, low), np.eye(R.shape[0]))
    except np.linalg.LinAlgError:
        raise CollinearityError(f"correlation matrix of columns {list(subset)} is singular")
    return np.diag(inv).copy()


def _normalize_subset(subset, data: Dataset) -> tuple[int, ...]:
    if subset is None:
        return tuple(range(data.p))
    subset = tuple(int(j) for j in subset)
    if len(set(subset)) != len(subset):
        raise ValueError("subset indices must be distinct")
    if any(j < 0 or j >= data.p for j in subset):
        raise ValueError("subset index out of range")
    return subset
