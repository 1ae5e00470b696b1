"""Likelihood families: logistic, Poisson, and Cox partial likelihood.

Each family exposes the mean-normalized negative log-likelihood (log partial
likelihood for Cox, Breslow tie handling) together with its analytic gradient
and Hessian, evaluated as pure functions of a dataset and a coefficient
vector.  GLM coefficient vectors carry the intercept in position 0; the Cox
model has no intercept (absorbed into the baseline hazard) and its vector has
length p.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.special import expit

from .data import Dataset

__all__ = [
    "Family",
    "LogisticFamily",
    "PoissonFamily",
    "CoxFamily",
    "get_family",
    "loss",
    "gradient",
    "hessian",
    "EvaluationOverflowError",
]

# Logistic linear predictors are clamped here before exponentiation; the
# optimum is unaffected at double precision.
ETA_CLAMP = 30.0

# exp(eta) above this is treated as an overflow for Poisson models.
POISSON_ETA_MAX = 700.0


class EvaluationOverflowError(FloatingPointError):
    """Linear predictor too large for the family's mean function."""


class Family:
    """Common interface: kind, intercept handling, loss/gradient/hessian."""

    kind: str = ""
    has_intercept: bool = True

    def n_coef(self, p: int) -> int:
        return p + 1 if self.has_intercept else p

    def linear_predictor(self, X: np.ndarray, coef: np.ndarray) -> np.ndarray:
        coef = np.asarray(coef, dtype=float)
        if coef.shape != (self.n_coef(X.shape[1]),):
            raise ValueError(
                f"coefficient vector of length {coef.shape[0]} does not match "
                f"{self.n_coef(X.shape[1])} for {self.kind}"
            )
        if self.has_intercept:
            return coef[0] + X @ coef[1:]
        return X @ coef

    # subclasses implement the eta-level pieces
    def loss(self, data: Dataset, coef) -> float:
        raise NotImplementedError

    def gradient(self, data: Dataset, coef) -> np.ndarray:
        raise NotImplementedError

    def hessian(self, data: Dataset, coef) -> np.ndarray:
        raise NotImplementedError

    def _assemble(self, X, g_eta, h_eta):
        """Map per-observation eta derivatives to coefficient space."""
        if self.has_intercept:
            Z = np.column_stack([np.ones(X.shape[0]), X])
        else:
            Z = X
        grad = Z.T @ g_eta
        hess = (Z * h_eta[:, None]).T @ Z
        return grad, 0.5 * (hess + hess.T)


class LogisticFamily(Family):
    kind = "logistic"

    @staticmethod
    def cumulant(theta):
        return np.logaddexp(0.0, theta)

    @staticmethod
    def mean(eta):
        return expit(np.clip(eta, -ETA_CLAMP, ETA_CLAMP))

    def loss(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        return float(np.mean(self.cumulant(eta) - data.y * eta))

    def gradient(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        g_eta = (self.mean(eta) - data.y) / data.n
        grad, _ = self._assemble(data.X, g_eta, np.zeros(data.n))
        return grad

    def hessian(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        mu = self.mean(eta)
        _, hess = self._assemble(data.X, np.zeros(data.n), mu * (1 - mu) / data.n)
        return hess

    def irls_weights(self, eta, data):
        mu = self.mean(eta)
        w = np.maximum(mu * (1 - mu), 1e-6)
        z = eta + (data.y - mu) / w
        return w / data.n, z

    def null_intercept(self, data):
        ybar = float(np.mean(data.y))
        ybar = min(max(ybar, 1e-12), 1 - 1e-12)
        return float(np.log(ybar / (1 - ybar)))

    def deviance(self, data, coef):
        """2 * (negative log-likelihood), unnormalized."""
        return 2.0 * data.n * self.loss(data, coef)


class PoissonFamily(Family):
    kind = "poisson"

    @staticmethod
    def cumulant(theta):
        return np.exp(theta)

    def _check(self, eta):
        if np.any(eta > POISSON_ETA_MAX):
            raise EvaluationOverflowError(
                "Poisson mean exp(eta) exceeds the representable range"
            )

    def loss(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        self._check(eta)
        return float(np.mean(np.exp(eta) - data.y * eta))

    def gradient(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        self._check(eta)
        g_eta = (np.exp(eta) - data.y) / data.n
        grad, _ = self._assemble(data.X, g_eta, np.zeros(data.n))
        return grad

    def hessian(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        self._check(eta)
        _, hess = self._assemble(data.X, np.zeros(data.n), np.exp(eta) / data.n)
        return hess

    def irls_weights(self, eta, data):
        self._check(eta)
        mu = np.exp(eta)
        w = np.maximum(mu, 1e-6)
        z = eta + (data.y - mu) / w
        return w / data.n, z

    def null_intercept(self, data):
        ybar = max(float(np.mean(data.y)), 1e-12)
        return float(np.log(ybar))

    def deviance(self, data, coef):
        return 2.0 * data.n * self.loss(data, coef)


@njit(cache=True)
def _cox_core(eta_s, d_s, grp_first, grp_inv, d_grp):
    """Sorted-order Cox loss pieces; see CoxFamily._risk_parts."""
    n = eta_s.shape[0]
    shift = eta_s[0]
    for i in range(1, n):
        if eta_s[i] > shift:
            shift = eta_s[i]
    w_s = np.exp(eta_s - shift)
    rev = np.empty(n)
    acc = 0.0
    for i in range(n - 1, -1, -1):
        acc += w_s[i]
        rev[i] = acc
    G = grp_first.shape[0]
    a_grp = np.empty(G)
    b_grp = np.empty(G)
    loss_term = 0.0
    a = 0.0
    b = 0.0
    for g in range(G):
        S = rev[grp_first[g]]
        loss_term += d_grp[g] * (np.log(S) + shift)
        a += d_grp[g] / S
        b += d_grp[g] / (S * S)
        a_grp[g] = a
        b_grp[g] = b
    num = 0.0
    g_sorted = np.empty(n)
    h_sorted = np.empty(n)
    for i in range(n):
        A = a_grp[grp_inv[i]]
        B = b_grp[grp_inv[i]]
        num += d_s[i] * eta_s[i]
        g_sorted[i] = -(d_s[i] - w_s[i] * A) / n
        h_sorted[i] = (w_s[i] * A - w_s[i] * w_s[i] * B) / n
    loss = -(num - loss_term) / n
    return loss, g_sorted, h_sorted


@njit(cache=True)
def _cox_hessian_core(eta_s, X_s, grp_first, grp_inv, d_grp):
    """Observed information of the normalized negative log partial likelihood.

    Single backward pass accumulating the risk-set sums S (scalar), m1
    (p-vector), and M2 (p x p) needed at each tie group's first index:
    H = sum_g d_g * (M2_g / S_g - m1_g m1_g^T / S_g^2) / n.
    """
    n, p = X_s.shape
    shift = eta_s[0]
    for i in range(1, n):
        if eta_s[i] > shift:
            shift = eta_s[i]
    acc0 = 0.0
    acc1 = np.zeros(p)
    acc2 = np.zeros((p, p))
    H = np.zeros((p, p))
    for i in range(n - 1, -1, -1):
        w = np.exp(eta_s[i] - shift)
        acc0 += w
        for a in range(p):
            wxa = w * X_s[i, a]
            acc1[a] += wxa
            for b in range(p):
                acc2[a, b] += wxa * X_s[i, b]
        if grp_first[grp_inv[i]] == i:
            d = d_grp[grp_inv[i]]
            if d > 0.0:
                c1 = d / acc0
                c2 = d / (acc0 * acc0)
                for a in range(p):
                    for b in range(p):
                        H[a, b] += c1 * acc2[a, b] - c2 * acc1[a] * acc1[b]
    return H / n


class CoxFamily(Family):
    """Cox proportional hazards, Breslow approximation for ties."""

    kind = "cox"
    has_intercept = False

    # sort/tie-group structures keyed by the raw bytes of (time, status);
    # solvers evaluate the same survival response thousands of times per path
    _structure_cache: dict = {}

    @classmethod
    def _structure(cls, time, status):
        key = (time.tobytes(), status.tobytes())
        cached = cls._structure_cache.get(key)
        if cached is None:
            order = np.argsort(time, kind="stable")
            t_s = time[order]
            d_s = status[order]
            _, grp_first, grp_inv = np.unique(
                t_s, return_index=True, return_inverse=True
            )
            d_grp = np.bincount(grp_inv, weights=d_s)
            cached = (
                order,
                np.ascontiguousarray(d_s, dtype=float),
                np.ascontiguousarray(grp_first, dtype=np.int64),
                np.ascontiguousarray(grp_inv, dtype=np.int64),
                np.ascontiguousarray(d_grp, dtype=float),
            )
            if len(cls._structure_cache) > 128:
                cls._structure_cache.clear()
            cls._structure_cache[key] = cached
        return cached

    @staticmethod
    def _risk_parts(eta, time, status):
        """Per-observation loss pieces via sorted reverse cumulative sums.

        Returns (loss, g_eta, h_eta_diag) where g/h are the first and second
        derivatives of the normalized negative log partial likelihood with
        respect to each observation's linear predictor.  Risk-set sums run
        from the largest time downward; tied times share the sum taken at the
        first index of their tie group (Breslow).
        """
        n = eta.shape[0]
        order, d_s, grp_first, grp_inv, d_grp = CoxFamily._structure(time, status)
        eta_s = np.ascontiguousarray(eta[order])
        loss, g_sorted, h_sorted = _cox_core(eta_s, d_s, grp_first, grp_inv, d_grp)
        g = np.empty(n)
        h = np.empty(n)
        g[order] = g_sorted
        h[order] = h_sorted
        return loss, g, h

    def loss(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        l, _, _ = self._risk_parts(eta, data.time, data.status)
        return float(l)

    def gradient(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        _, g_eta, _ = self._risk_parts(eta, data.time, data.status)
        return data.X.T @ g_eta

    def hessian(self, data, coef):
        eta = self.linear_predictor(data.X, coef)
        order, _, grp_first, grp_inv, d_grp = CoxFamily._structure(
            data.time, data.status
        )
        eta_s = np.ascontiguousarray(eta[order])
        X_s = np.ascontiguousarray(data.X[order])
        H = _cox_hessian_core(eta_s, X_s, grp_first, grp_inv, d_grp)
        return 0.5 * (H + H.T)

    def irls_weights(self, eta, data):
        """Diagonal quadratic approximation for coordinate descent."""
        _, g_eta, h_eta = self._risk_parts(eta, data.time, data.status)
        w = np.maximum(h_eta, 1e-10)
        z = eta - g_eta / w
        return w, z

    def deviance(self, data, coef):
        return 2.0 * data.n * self.loss(data, coef)


_FAMILIES = {
    "logistic": LogisticFamily(),
    "poisson": PoissonFamily(),
    "cox": CoxFamily(),
}


def get_family(kind) -> Family:
    if isinstance(kind, Family):
        return kind
    try:
        return _FAMILIES[str(kind).lower()]
    except KeyError:
        raise ValueError(f"unknown family {kind!r}; expected one of {sorted(_FAMILIES)}")


def loss(family, data, coef) -> float:
    return get_family(family).loss(data, coef)


def gradient(family, data, coef) -> np.ndarray:
    return get_family(family).gradient(data, coef)


def hessian(family, data, coef) -> np.ndarray:
    return get_family(family).hessian(data, coef)
