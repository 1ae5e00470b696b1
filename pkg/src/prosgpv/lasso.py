"""L1-penalized paths via coordinate descent, with GIC and CV lambda selection.

The solver standardizes columns internally, runs penalized IRLS (outer
quadratic approximation, inner cyclic coordinate descent) down a log-spaced
lambda grid with warm starts, and reports coefficients on the original
predictor scale.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data import DataError, Dataset
from .families import CoxFamily, EvaluationOverflowError, _cox_core, get_family
from .fitting import FitOptions, RankDeficiencyError, fit_mle

__all__ = [
    "LassoPath",
    "PathError",
    "solve_path",
    "gic",
    "select_lambda_gic",
    "select_lambda_cv",
]

CD_TOL = 1e-7          # max coefficient change per sweep
CD_MAX_SWEEPS = 1000   # per quadratic approximation
OUTER_TOL = 1e-6
OUTER_MAX = 100


class PathError(RuntimeError):
    pass


@dataclass
class LassoPath:
    """Solution path over a descending lambda grid.

    ``coefs`` holds original-scale coefficient vectors (intercept first for
    GLM families); ``coefs_std`` the standardized-scale predictor
    coefficients used for KKT checks and candidate-set truncation.  GIC
    values and the selected lambdas are filled in by the selection helpers.
    """

    family: str
    data: Dataset
    lambdas: np.ndarray
    coefs: np.ndarray
    coefs_std: np.ndarray
    active_sets: list[tuple[int, ...]]
    df: np.ndarray
    gic: np.ndarray | None = None
    lambda_gic: float | None = None
    lambda_min: float | None = None
    cv_deviance: np.ndarray | None = None
    _gic_index: int | None = field(default=None, repr=False)
    _cv_index: int | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.lambdas)

    def coef_at(self, i: int) -> np.ndarray:
        return self.coefs[i]


@njit(cache=True)
def _cd_sweep(Xt, w, r, xwx, beta, intercept, lam, has_intercept, sum_w, active_only):
    """One cyclic pass; mutates r/beta, returns (intercept, max_change).

    With ``active_only`` the zero coordinates are skipped (their soft
    threshold cannot fire without a full pass updating the residual first).
    """
    p, n = Xt.shape
    max_change = 0.0
    if has_intercept:
        num = 0.0
        for i in range(n):
            num += w[i] * r[i]
        delta = num / sum_w
        intercept += delta
        for i in range(n):
            r[i] -= delta
        if abs(delta) > max_change:
            max_change = abs(delta)
    for j in range(p):
        if xwx[j] <= 0.0:
            continue
        bj = beta[j]
        if active_only and bj == 0.0:
            continue
        rho = bj * xwx[j]
        for i in range(n):
            rho += w[i] * Xt[j, i] * r[i]
        if rho > lam:
            new = (rho - lam) / xwx[j]
        elif rho < -lam:
            new = (rho + lam) / xwx[j]
        else:
            new = 0.0
        if new != bj:
            d = new - bj
            for i in range(n):
                r[i] -= d * Xt[j, i]
            beta[j] = new
            if abs(d) > max_change:
                max_change = abs(d)
    return intercept, max_change


@njit(cache=True)
def _cd_inner(Xt, w, r, xwx, beta, intercept, lam, has_intercept, sum_w, tol, max_sweeps):
    """Cyclic coordinate descent on the weighted quadratic approximation.

    Alternates full passes with cheaper active-set-only passes; terminates
    when a full pass moves no coordinate by more than ``tol``.  Mutates r and
    beta in place, returns (intercept, sweeps, max_change_last_sweep).
    """
    sweeps = 0
    max_change = np.inf
    while sweeps < max_sweeps:
        intercept, max_change = _cd_sweep(
            Xt, w, r, xwx, beta, intercept, lam, has_intercept, sum_w, False
        )
        sweeps += 1
        if max_change <= tol:
            break
        while sweeps < max_sweeps:
            intercept, ac = _cd_sweep(
                Xt, w, r, xwx, beta, intercept, lam, has_intercept, sum_w, True
            )
            sweeps += 1
            if ac <= tol:
                break
    return intercept, sweeps, max_change


def _eta_gradient(family, sdata, eta):
    """dloss/deta; recovered from the IRLS weights/working response."""
    w, z = family.irls_weights(eta, sdata)
    return -w * (z - eta), w, z


_KIND_CODES = {"logistic": 0, "poisson": 1, "cox": 2}


@njit(cache=True)
def _path_kernel(kind, X, Xt, Xsq, y, d_s, grp_first, grp_inv, d_grp, order,
                 lambdas, beta, intercept, has_intercept,
                 outer_tol, outer_max, cd_tol, cd_max_sweeps):
    """Penalized IRLS down the lambda grid, fully jitted.

    kind: 0 logistic, 1 poisson, 2 cox (d_s/grp_*/order only used then).
    Returns (intercepts, betas, status, k) with status 0 = ok, 1 = outer loop
    did not converge, 2 = poisson mean overflow; k is the failing grid index.
    """
    n, p = X.shape
    nl = lambdas.shape[0]
    out_b0 = np.empty(nl)
    out_beta = np.empty((nl, p))
    w = np.empty(n)
    z = np.empty(n)
    beta_old = np.empty(p)
    for k in range(nl):
        lam = lambdas[k]
        converged = False
        for _ in range(outer_max):
            eta = np.dot(X, beta)
            if has_intercept:
                for i in range(n):
                    eta[i] += intercept
            if kind == 0:
                for i in range(n):
                    x = eta[i]
                    if x > 30.0:
                        x = 30.0
                    elif x < -30.0:
                        x = -30.0
                    mu = 1.0 / (1.0 + np.exp(-x))
                    wr = mu * (1.0 - mu)
                    if wr < 1e-6:
                        wr = 1e-6
                    z[i] = eta[i] + (y[i] - mu) / wr
                    w[i] = wr / n
            elif kind == 1:
                for i in range(n):
                    if eta[i] > 700.0:
                        return out_b0, out_beta, 2, k
                    mu = np.exp(eta[i])
                    wr = mu if mu > 1e-6 else 1e-6
                    z[i] = eta[i] + (y[i] - mu) / wr
                    w[i] = wr / n
            else:
                eta_s = np.empty(n)
                for i in range(n):
                    eta_s[i] = eta[order[i]]
                _, g_s, h_s = _cox_core(eta_s, d_s, grp_first, grp_inv, d_grp)
                for i in range(n):
                    oi = order[i]
                    hh = h_s[i]
                    if hh < 1e-10:
                        hh = 1e-10
                    w[oi] = hh
                    z[oi] = eta[oi] - g_s[i] / hh
            xwx = np.dot(w, Xsq)
            sum_w = 0.0
            for i in range(n):
                sum_w += w[i]
            r = np.empty(n)
            for i in range(n):
                r[i] = z[i] - eta[i]
            b0_old = intercept
            for j in range(p):
                beta_old[j] = beta[j]
            intercept, _, _ = _cd_inner(
                Xt, w, r, xwx, beta, intercept, lam, has_intercept,
                sum_w, cd_tol, cd_max_sweeps,
            )
            change = 0.0
            scale = 1.0
            for j in range(p):
                d = abs(beta[j] - beta_old[j])
                if d > change:
                    change = d
                if abs(beta[j]) > scale:
                    scale = abs(beta[j])
            if has_intercept and abs(intercept - b0_old) > change:
                change = abs(intercept - b0_old)
            if change < outer_tol * scale:
                converged = True
                break
        if not converged:
            return out_b0, out_beta, 1, k
        out_b0[k] = intercept
        out_beta[k] = beta
    return out_b0, out_beta, 0, nl


_EMPTY_F = np.empty(0)
_EMPTY_I = np.empty(0, dtype=np.int64)


def _solve_at_lambdas(family, sdata, lambdas, warm=None):
    """Core path solver on a standardized dataset; returns std-scale coefs.

    Returns (intercepts, betas, n_solved): if the solver stops converging (or
    a Poisson mean overflows) partway down the grid — the overfit tail under
    near-separation — the path is truncated to the solved prefix.  An error
    is raised only when not even the first (sparsest) lambda is solvable.
    """
    p = sdata.p
    X = np.ascontiguousarray(sdata.X)
    Xt = np.ascontiguousarray(sdata.X.T)
    Xsq = sdata.X**2
    has_intercept = family.has_intercept
    beta = np.zeros(p)
    intercept = family.null_intercept(sdata) if has_intercept else 0.0
    if warm is not None:
        beta = warm[0].copy()
        intercept = warm[1]
    kind = _KIND_CODES[family.kind]
    if kind == 2:
        order, d_s, grp_first, grp_inv, d_grp = CoxFamily._structure(
            sdata.time, sdata.status
        )
        y = _EMPTY_F
    else:
        order, d_s, grp_first, grp_inv, d_grp = _EMPTY_I, _EMPTY_F, _EMPTY_I, _EMPTY_I, _EMPTY_F
        y = np.ascontiguousarray(sdata.y, dtype=float)
    out_b0, out_beta, status, k = _path_kernel(
        kind, X, Xt, Xsq, y, d_s, grp_first, grp_inv, d_grp,
        np.ascontiguousarray(order, dtype=np.int64),
        np.ascontiguousarray(lambdas, dtype=float), beta, float(intercept),
        has_intercept, OUTER_TOL, OUTER_MAX, CD_TOL, CD_MAX_SWEEPS,
    )
    n_solved = int(k) if status else len(lambdas)
    if n_solved == 0:
        if status == 2:
            raise EvaluationOverflowError(
                "Poisson mean exp(eta) exceeds the representable range"
            )
        raise PathError(
            f"coordinate descent did not converge at lambda={lambdas[0]:.6g}"
        )
    return out_b0[:n_solved], out_beta[:n_solved], n_solved


def _check_response(family, data):
    if family.kind == "cox":
        if data.status.sum() < 1:
            raise DataError("no events in survival response")
    elif family.kind == "logistic":
        if len(np.unique(data.y)) < 2:
            raise DataError("all-constant binary response")


def solve_path(
    family,
    data: Dataset,
    grid_size: int = 100,
    lambda_ratio: float | None = None,
    lambdas: np.ndarray | None = None,
) -> LassoPath:
    """Solve the l1 path on a log-spaced grid from lambda_max down.

    lambda_max is the smallest penalty with an empty active set (the max
    absolute unpenalized-loss gradient at the null fit, standardized scale).
    ``lambdas`` overrides the automatic grid (used by cross-validation).
    """
    family = get_family(family)
    _check_response(family, data)
    sdata = data.standardize()
    n, p = sdata.n, sdata.p

    if lambdas is None:
        eta0 = (
            np.full(n, family.null_intercept(sdata))
            if family.has_intercept
            else np.zeros(n)
        )
        g_eta, _, _ = _eta_gradient(family, sdata, eta0)
        lam_max = float(np.max(np.abs(sdata.X.T @ g_eta)))
        if lam_max <= 0:
            raise PathError("degenerate problem: lambda_max is zero")
        if lambda_ratio is None:
            lambda_ratio = 1e-4 if n > p else 1e-2
        # tiny inflation keeps the first active set empty under rounding
        lam_max *= 1.0 + 1e-9
        lambdas = lam_max * lambda_ratio ** (np.arange(grid_size) / (grid_size - 1))
    else:
        lambdas = np.asarray(lambdas, dtype=float)

    b0_std, beta_std, n_solved = _solve_at_lambdas(family, sdata, lambdas)
    lambdas = lambdas[:n_solved]

    # back to original scale
    if sdata.column_sds is None:
        sds, means = np.ones(p), np.zeros(p)
    else:
        sds, means = sdata.column_sds, sdata.column_means
    beta_orig = beta_std / sds
    coefs = np.empty((len(lambdas), family.n_coef(p)))
    if family.has_intercept:
        coefs[:, 0] = b0_std - beta_orig @ means
        coefs[:, 1:] = beta_orig
    else:
        coefs[:] = beta_orig

    active_sets = [
        tuple(int(j) for j in np.nonzero(beta_std[k])[0]) for k in range(len(lambdas))
    ]
    df = np.array([len(a) for a in active_sets])
    return LassoPath(
        family=family.kind,
        data=data,
        lambdas=lambdas,
        coefs=coefs,
        coefs_std=beta_std,
        active_sets=active_sets,
        df=df,
    )


def gic(family, data: Dataset, active_set) -> float:
    """Generalized information criterion of the relaxed refit of a set.

    deviance + a_n * df with deviance = 2n * loss at the unpenalized refit
    of the active set and a_n = log(log n) * log p.
    """
    family = get_family(family)
    n, p = data.n, data.p
    if n <= np.e:
        raise ValueError("GIC needs n > e for log(log n)")
    a_n = np.log(np.log(n)) * np.log(p)
    active_set = tuple(int(j) for j in active_set)
    if len(active_set) > n - 2:
        return np.inf
    try:
        fit = fit_mle(family, data, active_set)
    except (RankDeficiencyError, FloatingPointError):
        return np.inf
    return float(2 * n * fit.final_loss + a_n * len(active_set))


def select_lambda_gic(path: LassoPath) -> tuple[float, tuple[int, ...]]:
    """Pick the lambda minimizing GIC (smallest lambda on ties).

    Fills ``path.gic`` and ``path.lambda_gic``; returns (lambda, candidate
    set).  If the candidate set exceeds n-2 it is truncated to the n-2
    largest standardized coefficients.
    """
    if len(path) == 0:
        raise PathError("empty path")
    family = get_family(path.family)
    data = path.data
    cache: dict[tuple[int, ...], float] = {}
    values = np.empty(len(path))
    for k, aset in enumerate(path.active_sets):
        key = _truncate(aset, path.coefs_std[k], data.n)
        if key not in cache:
            cache[key] = gic(family, data, key)
        values[k] = cache[key]
    # descending lambdas: <= prefers the later (smaller) lambda on ties
    best = 0
    for k in range(len(path)):
        if values[k] <= values[best]:
            best = k
    path.gic = values
    path.lambda_gic = float(path.lambdas[best])
    path._gic_index = best
    C = _truncate(path.active_sets[best], path.coefs_std[best], data.n)
    return path.lambda_gic, C


def _truncate(active_set, beta_std, n):
    cap = n - 2
    if len(active_set) <= cap:
        return tuple(active_set)
    idx = np.array(active_set)
    order = np.argsort(-np.abs(beta_std[idx]), kind="stable")
    return tuple(int(j) for j in sorted(idx[order[:cap]]))


def select_lambda_cv(
    family,
    data: Dataset,
    path: LassoPath,
    folds: int = 10,
    rng: np.random.Generator | None = None,
) -> float:
    """Lambda minimizing mean out-of-fold deviance on the path's grid.

    Cox folds use the Verweij-van Houwelingen construction: the fold's
    deviance contribution is twice the full-data minus training-data
    negative log partial likelihood at the training-fold fit.
    """
    family = get_family(family)
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = rng or np.random.default_rng()
    n = data.n
    assignment = _fold_assignment(family, data, folds, rng)

    dev = np.zeros((folds, len(path)))
    for f in range(folds):
        train = assignment != f
        test = ~train
        tr = _subset_rows(data, train)
        sub_path = solve_path(family, tr, lambdas=path.lambdas)
        for k in range(len(path)):
            if k >= len(sub_path):
                # fold path truncated under near-separation: that tail is
                # never a defensible lambda_min
                dev[f, k] = np.inf
                continue
            coef = sub_path.coefs[k]
            if family.kind == "cox":
                full = data.n * family.loss(data, coef)
                part = tr.n * family.loss(tr, coef)
                dev[f, k] = 2.0 * (full - part)
            else:
                te = _subset_rows(data, test)
                dev[f, k] = te.n * 2.0 * family.loss(te, coef)

    mean_dev = dev.mean(axis=0)
    best = int(np.argmin(mean_dev))
    path.lambda_min = float(path.lambdas[best])
    path.cv_deviance = mean_dev
    path._cv_index = best
    return path.lambda_min


def _fold_assignment(family, data, folds, rng):
    for attempt in range(2):
        assignment = rng.permutation(np.arange(data.n) % folds)
        ok = True
        for f in range(folds):
            train = assignment != f
            if family.kind == "logistic" and len(np.unique(data.y[train])) < 2:
                ok = False
            if family.kind == "cox" and data.status[train].sum() < 1:
                ok = False
        if ok:
            return assignment
    raise DataError("could not build folds with non-degenerate training responses")


def _subset_rows(data: Dataset, mask) -> Dataset:
    return Dataset(
        X=np.ascontiguousarray(data.X[mask]),
        y=None if data.y is None else data.y[mask],
        time=None if data.time is None else data.time[mask],
        status=None if data.status is None else data.status[mask],
        names=data.names,
    )
