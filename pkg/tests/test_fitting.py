import numpy as np
import pytest

from prosgpv import (
    FitOptions,
    RankDeficiencyError,
    fit_firth_logistic,
    fit_mle,
    get_family,
    gradient,
    gvif,
    hessian,
    make_dataset,
)
from conftest import FAMILIES, bfgs_oracle, random_instance


class TestClosedForms:
    def test_logistic_intercept_only(self, rng):
        X = rng.standard_normal((100, 3))
        y = np.zeros(100)
        y[:30] = 1.0
        fit = fit_mle("logistic", make_dataset(X, y=y), subset=())
        assert fit.coef[0] == pytest.approx(np.log(30 / 70), abs=1e-6)
        assert np.all(fit.coef[1:] == 0)
        assert np.all(np.isnan(fit.se[1:]))

    def test_poisson_intercept_only(self, rng):
        X = rng.standard_normal((40, 2))
        y = np.full(40, 2.5)
        fit = fit_mle("poisson", make_dataset(X, y=y), subset=())
        assert fit.coef[0] == pytest.approx(np.log(2.5), abs=1e-8)


@pytest.mark.parametrize("kind", FAMILIES)
class TestAgainstOracle:
    def test_matches_bfgs_minimizer(self, kind, rng):
        for _ in range(10):
            data, _ = random_instance(kind, rng, n=50, p=4)
            fit = fit_mle(kind, data)
            oracle = bfgs_oracle(kind, data)
            fam = get_family(kind)
            mine = fit.coef if kind == "cox" else fit.coef
            assert np.max(np.abs(mine - oracle)) < 1e-5

    def test_score_small_at_convergence(self, kind, rng):
        data, _ = random_instance(kind, rng, n=60, p=4)
        opts = FitOptions(tol=1e-8)
        fit = fit_mle(kind, data, options=opts)
        assert fit.converged
        assert np.max(np.abs(gradient(kind, data, fit.coef))) < 10 * opts.tol

    def test_se_from_inverse_information(self, kind, rng):
        data, _ = random_instance(kind, rng, n=80, p=4)
        fit = fit_mle(kind, data)
        H = hessian(kind, data, fit.coef) * data.n
        se = np.sqrt(np.diag(np.linalg.inv(H)))
        np.testing.assert_allclose(fit.se, se, rtol=1e-8)

    def test_standardization_equivariance(self, kind, rng):
        data, _ = random_instance(kind, rng, n=80, p=4)
        raw = fit_mle(kind, data)
        std = fit_mle(kind, data.standardize())
        sds = data.X.std(axis=0)
        means = data.X.mean(axis=0)
        if kind == "cox":
            back = std.coef / sds
            np.testing.assert_allclose(back, raw.coef, atol=1e-6)
        else:
            back_beta = std.coef[1:] / sds
            back_int = std.coef[0] - back_beta @ means
            np.testing.assert_allclose(back_beta, raw.coef[1:], atol=1e-6)
            assert back_int == pytest.approx(raw.coef[0], abs=1e-6)


class TestErrors:
    def test_rank_deficiency_names_columns(self, rng):
        X = rng.standard_normal((30, 3))
        X = np.column_stack([X, X[:, 0]])  # duplicate column
        y = rng.integers(0, 2, 30).astype(float)
        with pytest.raises(RankDeficiencyError) as exc:
            fit_mle("logistic", make_dataset(X, y=y))
        assert len(exc.value.columns) >= 1

    def test_subset_too_large(self, rng):
        data, _ = random_instance("logistic", rng, n=6, p=5)
        with pytest.raises(ValueError):
            fit_mle("logistic", data, subset=range(5))

    def test_duplicate_subset_rejected(self, rng):
        data, _ = random_instance("logistic", rng)
        with pytest.raises(ValueError):
            fit_mle("logistic", data, subset=[0, 0])

    def test_separation_warning(self, rng):
        x = np.concatenate([-rng.uniform(0.5, 1, 15), rng.uniform(0.5, 1, 15)])
        y = (x > 0).astype(float)
        X = np.column_stack([x, rng.standard_normal(30)])
        fit = fit_mle("logistic", make_dataset(X, y=y))
        assert not fit.converged or "possible separation" in fit.warnings


class TestFirth:
    def separated(self, rng, n=20):
        x = np.concatenate([-rng.uniform(0.2, 1, n // 2), rng.uniform(0.2, 1, n // 2)])
        y = (x > 0).astype(float)
        X = np.column_stack([x])
        return make_dataset(X, y=y)

    def test_finite_under_separation(self, rng):
        for _ in range(10):
            fit = fit_firth_logistic(self.separated(rng))
            assert fit.converged
            assert np.all(np.abs(fit.coef) < 20)
            assert np.all(fit.se[~np.isnan(fit.se)] > 0)

    def test_balanced_intercept_near_zero(self, rng):
        X = rng.standard_normal((40, 1))
        y = np.array([0.0, 1.0] * 20)
        fit = fit_firth_logistic(make_dataset(X, y=y), subset=())
        assert abs(fit.coef[0]) < 0.05

    def test_close_to_mle_when_n_large(self, rng):
        # bias correction is O(1/n)
        x = rng.standard_normal(200)
        y = rng.binomial(1, 1 / (1 + np.exp(-1.0 * x))).astype(float)
        d = make_dataset(np.column_stack([x]), y=y)
        plain = fit_mle("logistic", d)
        firth = fit_firth_logistic(d)
        assert abs(firth.coef[1] - plain.coef[1]) / abs(plain.coef[1]) < 0.10

    def test_jeffreys_flag_routes_through_fit_mle(self, rng):
        d = self.separated(rng)
        fit = fit_mle("logistic", d, options=FitOptions(jeffreys=True))
        assert np.all(np.abs(fit.coef) < 20)


class TestGvif:
    def test_orthogonal_columns(self, rng):
        # QR of a centered matrix: columns stay mean-zero and exactly orthogonal
        X = rng.standard_normal((100, 4))
        Q, _ = np.linalg.qr(X - X.mean(axis=0))
        d = make_dataset(Q, y=rng.integers(0, 2, 100).astype(float))
        np.testing.assert_allclose(gvif(d, range(4)), 1.0, atol=1e-10)

    def test_two_correlated_columns_closed_form(self, rng):
        x1 = rng.standard_normal(500)
        x2 = 0.6 * x1 + 0.8 * rng.standard_normal(500)
        d = make_dataset(np.column_stack([x1, x2]), y=np.zeros(500) + rng.integers(0, 2, 500))
        r = np.corrcoef(x1, x2)[0, 1]
        np.testing.assert_allclose(gvif(d, [0, 1]), 1 / (1 - r**2), rtol=1e-10)

    def test_single_column_is_one(self, rng):
        d = make_dataset(rng.standard_normal((20, 3)), y=rng.integers(0, 2, 20).astype(float))
        np.testing.assert_array_equal(gvif(d, [2]), [1.0])

    def test_matches_r2_regression_definition(self, rng):
        from prosgpv.simulate import draw_design

        X = draw_design(5000, 5, 0.35, 1.0, rng)
        d = make_dataset(X, y=rng.integers(0, 2, 5000).astype(float))
        g = gvif(d, range(5))
        Xc = X - X.mean(axis=0)
        for j in range(5):
            others = np.delete(Xc, j, axis=1)
            coef, *_ = np.linalg.lstsq(others, Xc[:, j], rcond=None)
            resid = Xc[:, j] - others @ coef
            r2 = 1 - resid @ resid / (Xc[:, j] @ Xc[:, j])
            assert g[j] == pytest.approx(1 / (1 - r2), abs=1e-8)
