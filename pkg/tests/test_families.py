import numpy as np
import pytest

from prosgpv import (
    EvaluationOverflowError,
    get_family,
    gradient,
    hessian,
    loss,
    make_dataset,
)
from conftest import FAMILIES, bfgs_oracle, random_instance


def fd_gradient(kind, data, coef, h=1e-5):
    g = np.zeros_like(coef)
    for j in range(len(coef)):
        e = np.zeros_like(coef)
        e[j] = h
        g[j] = (loss(kind, data, coef + e) - loss(kind, data, coef - e)) / (2 * h)
    return g


def fd_hessian(kind, data, coef, h=1e-5):
    cols = []
    for j in range(len(coef)):
        e = np.zeros_like(coef)
        e[j] = h
        cols.append((gradient(kind, data, coef + e) - gradient(kind, data, coef - e)) / (2 * h))
    return np.column_stack(cols)


class TestLossValues:
    def test_logistic_balanced_null_is_log2(self, rng):
        X = rng.standard_normal((40, 3))
        y = np.array([0.0, 1.0] * 20)
        d = make_dataset(X, y=y)
        assert loss("logistic", d, np.zeros(4)) == pytest.approx(np.log(2), abs=1e-12)

    def test_poisson_unit_response_null(self, rng):
        X = rng.standard_normal((25, 2))
        d = make_dataset(X, y=np.ones(25))
        assert loss("poisson", d, np.zeros(3)) == pytest.approx(1.0, abs=1e-12)

    def test_cox_three_subjects_hand_computed(self):
        # all events at times 1 < 2 < 3, beta = 0: partial likelihood is
        # (1/3)(1/2)(1/1), so the mean negative log is (log 3 + log 2) / 3
        d = make_dataset(
            np.array([[1.0], [0.0], [0.0]]),
            time=[1.0, 2.0, 3.0],
            status=[1, 1, 1],
        )
        expected = (np.log(3) + np.log(2)) / 3
        assert loss("cox", d, np.zeros(1)) == pytest.approx(expected, abs=1e-9)

    def test_logistic_null_gradient_formula(self, rng):
        X = rng.standard_normal((50, 4))
        y = rng.integers(0, 2, 50).astype(float)
        d = make_dataset(X, y=y)
        g = gradient("logistic", d, np.zeros(5))
        expected = -X.T @ (y - 0.5) / 50
        np.testing.assert_allclose(g[1:], expected, atol=1e-12)

    def test_logistic_null_hessian_formula(self, rng):
        X = rng.standard_normal((30, 3))
        y = rng.integers(0, 2, 30).astype(float)
        d = make_dataset(X, y=y)
        Z = np.column_stack([np.ones(30), X])
        np.testing.assert_allclose(
            hessian("logistic", d, np.zeros(4)), 0.25 * Z.T @ Z / 30, atol=1e-12
        )


@pytest.mark.parametrize("kind", FAMILIES)
class TestDerivatives:
    def test_gradient_vanishes_at_mle(self, kind, rng):
        data, _ = random_instance(kind, rng, n=60, p=3)
        coef = bfgs_oracle(kind, data)
        assert np.max(np.abs(gradient(kind, data, coef))) < 1e-6

    def test_matches_finite_differences(self, kind, rng):
        for _ in range(20):
            data, _ = random_instance(kind, rng, n=rng.integers(10, 31), p=rng.integers(2, 6))
            fam = get_family(kind)
            coef = rng.normal(0, 0.3, fam.n_coef(data.p))
            g = gradient(kind, data, coef)
            gf = fd_gradient(kind, data, coef)
            scale = max(np.max(np.abs(gf)), 1e-8)
            assert np.max(np.abs(g - gf)) / scale < 1e-4
            H = hessian(kind, data, coef)
            Hf = fd_hessian(kind, data, coef)
            assert np.max(np.abs(H - Hf)) / max(np.max(np.abs(Hf)), 1e-8) < 1e-4

    def test_hessian_symmetric_and_psd(self, kind, rng):
        data, _ = random_instance(kind, rng)
        fam = get_family(kind)
        coef = rng.normal(0, 0.5, fam.n_coef(data.p))
        H = hessian(kind, data, coef)
        np.testing.assert_array_equal(H, H.T)
        assert np.min(np.linalg.eigvalsh(H)) > -1e-10

    def test_convexity_probe(self, kind, rng):
        data, _ = random_instance(kind, rng)
        fam = get_family(kind)
        m = fam.n_coef(data.p)
        for _ in range(25):
            a = rng.normal(0, 0.5, m)
            b = rng.normal(0, 0.5, m)
            t = rng.uniform(0.05, 0.95)
            lhs = loss(kind, data, t * a + (1 - t) * b)
            rhs = t * loss(kind, data, a) + (1 - t) * loss(kind, data, b)
            assert lhs <= rhs + 1e-10


class TestCoxSpecifics:
    def test_time_shift_invariance(self, rng):
        data, _ = random_instance("cox", rng, n=40, p=3)
        coef = rng.normal(0, 0.5, 3)
        shifted = make_dataset(data.X, time=data.time + 17.3, status=data.status)
        assert loss("cox", data, coef) == pytest.approx(loss("cox", shifted, coef), rel=1e-12)

    def test_breslow_tied_times(self):
        # two events share time 1; both use the full risk-set denominator
        d = make_dataset(
            np.array([[1.0], [2.0], [3.0]]),
            time=[1.0, 1.0, 2.0],
            status=[1, 1, 0],
        )
        eta = d.X[:, 0] * 0.1
        w = np.exp(eta)
        expected = -(eta[0] + eta[1] - 2 * np.log(w.sum())) / 3
        assert loss("cox", d, np.array([0.1])) == pytest.approx(expected, rel=1e-12)


class TestErrors:
    def test_dimension_mismatch(self, rng):
        data, _ = random_instance("logistic", rng)
        with pytest.raises(ValueError):
            loss("logistic", data, np.zeros(data.p + 5))

    def test_poisson_overflow(self, rng):
        X = np.column_stack([np.linspace(-1, 1, 20), rng.standard_normal(20)])
        d = make_dataset(X, y=np.ones(20))
        with pytest.raises(EvaluationOverflowError):
            loss("poisson", d, np.array([0.0, 2000.0, 0.0]))

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            get_family("gamma")
