"""Shared generators and independent oracles for the test suite.

The oracles here deliberately avoid the library's own solvers: restricted
maximum-likelihood checks go through scipy's quasi-Newton minimizer on the
loss callable, and l1-penalized checks go through a proximal-gradient (FISTA
with backtracking) loop.
"""

import numpy as np
import pytest
from scipy.optimize import minimize

from prosgpv import get_family, make_dataset
from prosgpv.simulate import PRESETS, make_data, make_true_beta

FAMILIES = ["logistic", "poisson", "cox"]


def random_instance(kind, rng, n=30, p=5, s=2):
    """Small random dataset from the matching preset's generating process."""
    from dataclasses import replace

    sc = replace(PRESETS[f"{kind}-low-s"], n=n, p=p, s=min(s, p))
    beta = make_true_beta(p, min(s, p), sc.beta_l, sc.beta_u, rng)
    for _ in range(20):
        try:
            data = make_data(sc, beta, rng)
        except Exception:
            continue
        if kind == "logistic" and len(np.unique(data.y)) < 2:
            continue
        return data, beta
    raise RuntimeError("could not draw a usable instance")


def bfgs_oracle(kind, data, subset=None, x0=None):
    """Independent minimizer of the restricted loss via scipy BFGS."""
    family = get_family(kind)
    subset = tuple(range(data.p)) if subset is None else tuple(subset)
    sub = make_dataset(
        data.X[:, list(subset)],
        y=data.y,
        time=data.time,
        status=data.status,
    )
    m = family.n_coef(len(subset))
    if x0 is None:
        x0 = np.zeros(m)
    res = minimize(
        lambda c: family.loss(sub, c),
        x0,
        jac=lambda c: family.gradient(sub, c),
        method="BFGS",
        options={"gtol": 1e-10, "maxiter": 2000},
    )
    return res.x


def fista_oracle(kind, sdata, lam, max_iter=20000, tol=1e-10):
    """Proximal-gradient solve of loss + lam*||beta||_1 on standardized data.

    Returns (intercept, beta) on the standardized scale; the intercept is
    unpenalized (absent for Cox).
    """
    family = get_family(kind)
    p = sdata.p
    has_int = family.has_intercept

    def smooth(b0, beta):
        coef = np.concatenate([[b0], beta]) if has_int else beta
        return family.loss(sdata, coef)

    def grad(b0, beta):
        coef = np.concatenate([[b0], beta]) if has_int else beta
        g = family.gradient(sdata, coef)
        return (g[0], g[1:]) if has_int else (0.0, g)

    b0 = family.null_intercept(sdata) if has_int else 0.0
    beta = np.zeros(p)
    yb0, ybeta = b0, beta.copy()
    t = 1.0
    step = 1.0
    f_y = smooth(yb0, ybeta)
    for _ in range(max_iter):
        g0, g = grad(yb0, ybeta)
        # backtracking on the smooth part
        while True:
            nb0 = yb0 - step * g0 if has_int else 0.0
            nbeta = np.sign(ybeta - step * g) * np.maximum(
                np.abs(ybeta - step * g) - step * lam, 0.0
            )
            d0 = nb0 - yb0
            d = nbeta - ybeta
            try:
                f_new = smooth(nb0, nbeta)
            except FloatingPointError:
                step *= 0.5
                continue
            quad = f_y + g0 * d0 + g @ d + (d0**2 + d @ d) / (2 * step)
            if f_new <= quad + 1e-14:
                break
            step *= 0.5
            if step < 1e-14:
                break
        t_new = (1 + np.sqrt(1 + 4 * t**2)) / 2
        accel = (t - 1) / t_new
        yb0 = nb0 + accel * (nb0 - b0)
        ybeta = nbeta + accel * (nbeta - beta)
        change = max(abs(nb0 - b0), np.max(np.abs(nbeta - beta), initial=0.0))
        b0, beta = nb0, nbeta
        t = t_new
        try:
            f_y = smooth(yb0, ybeta)
        except FloatingPointError:
            yb0, ybeta, t, f_y = b0, beta.copy(), 1.0, smooth(b0, beta)
        if change < tol:
            break
    return b0, beta


def sgpv_geometric(l, u, delta):
    """Direct geometric evaluation of the SGPV definition.

    Overlap is computed through explicit interval clipping; the wide-interval
    correction uses the null interval's length 2*delta.
    """
    null_len = 2.0 * delta
    if u - l == 0:
        return 1.0 if (-delta <= l <= delta) else 0.0
    lo = l if l > -delta else -delta
    hi = u if u < delta else delta
    overlap = hi - lo if hi > lo else 0.0
    frac = overlap / (u - l)
    if (u - l) > 2.0 * null_len:
        frac *= (u - l) / (2.0 * null_len)
    return frac


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
