import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from matrix_di.benchmarks import (
    BenchmarkKind,
    fit_ar1,
    fit_raw,
    fit_vec_lasso,
    fit_vec_ols,
    lambda_max,
    lasso_cd,
    lasso_path_fast,
    soft_threshold,
    vec_design,
)
from matrix_di.core_types import ValidationError


def test_ar1_slope():
    assert fit_ar1([1.0, 2.0, 4.0]) == 2.0
    with pytest.raises(ValidationError):
        fit_ar1([1.0, 2.0])
    with pytest.raises(ValidationError):
        fit_ar1([3.0, 3.0, 3.0])


def test_ar1_forecast_uses_power_of_slope():
    m = BenchmarkKind("ar1").fit(None, np.array([1.0, 2.0, 4.0, 8.0]), 2)
    assert_allclose(m.predict(None, [3.0]), [12.0])


def test_soft_threshold():
    assert soft_threshold(3.0, 1.0) == 2.0
    assert soft_threshold(-3.0, 1.0) == -2.0
    assert soft_threshold(0.5, 1.0) == 0.0


def test_vec_ordering_is_column_major():
    X = np.arange(6.0).reshape(1, 2, 3)
    assert_allclose(vec_design(X)[0], X[0].flatten(order="F"))


def test_vec_ols_hand_case():
    # X_t = diag(t, 1), y_{t+1} = t: coefficient on entry (0, 0) is one
    X = np.stack([np.diag([float(t), 1.0]) for t in range(1, 6)] + [np.eye(2)])
    y = np.concatenate([[0.0], np.arange(1.0, 6.0)])
    coef = fit_vec_ols(X, y, 1)
    pred = vec_design(X[:-1]) @ coef
    assert_allclose(pred, y[1:], atol=1e-12)


def test_vec_ols_minimum_norm_interpolates(rng):
    X = rng.standard_normal((6, 3, 3))
    y = rng.standard_normal(6)
    coef = fit_vec_ols(X, y, 1)
    D = vec_design(X[:-1])
    assert_allclose(D @ coef, y[1:], atol=1e-10)
    assert_allclose(coef, np.linalg.pinv(D) @ y[1:], atol=1e-10)


def test_lasso_lambda_max_gives_zero(rng):
    D = rng.standard_normal((40, 6))
    y = D[:, 0] + rng.standard_normal(40)
    res = lasso_cd(D, y, lambda_max(D, y))
    assert np.all(res.coef == 0)
    assert np.all(lasso_path_fast(D, y, [lambda_max(D, y)]) == 0)


def test_lasso_zero_penalty_matches_ols(rng):
    D = rng.standard_normal((60, 5)) * [1, 2, 0.5, 3, 1]
    y = D @ [1.0, -2.0, 0.0, 0.5, 3.0] + 0.1 * rng.standard_normal(60)
    res = lasso_cd(D, y, 0.0)
    ols, *_ = np.linalg.lstsq(D, y, rcond=None)
    assert res.converged
    assert np.max(np.abs(res.coef - ols)) < 1e-6


def test_lasso_objective_nonincreasing(rng):
    D = rng.standard_normal((50, 8))
    y = D[:, :3].sum(axis=1) + rng.standard_normal(50)
    tr = np.array(lasso_cd(D, y, 0.1 * lambda_max(D, y)).objective_trace)
    assert np.all(np.diff(tr) <= 1e-12 * np.abs(tr[:-1]))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), frac=st.floats(0.01, 0.9))
def test_compiled_path_agrees_with_reference(seed, frac):
    g = np.random.default_rng(seed)
    D = g.standard_normal((40, 6))
    y = D @ g.standard_normal(6) + g.standard_normal(40)
    lam = frac * lambda_max(D, y)
    ref = lasso_cd(D, y, lam).coef
    fast = lasso_path_fast(D, y, [lam], tol=1e-10)[:, 0]
    assert_allclose(fast, ref, atol=1e-5)


def test_vec_lasso_recovers_sparse_signal(rng):
    T = 200
    X = rng.standard_normal((T, 3, 3))
    y = np.zeros(T)
    y[1:] = 2.0 * X[:-1, 0, 0] + 0.1 * rng.standard_normal(T - 1)
    coef, lam = fit_vec_lasso(X, y, 1)
    assert lam > 0
    assert abs(coef[0] - 2.0) < 0.1
    assert np.max(np.abs(coef[1:])) < 0.1


def test_raw_scalar_case():
    X = np.arange(1.0, 8.0).reshape(7, 1, 1)
    y = np.concatenate([[0.0], 3.0 * np.arange(1.0, 7.0)])
    est = fit_raw(X, y, 1)
    assert_allclose(est.alpha_vec[0] * est.beta_vec[0], 3.0, rtol=1e-10)


def test_raw_needs_enough_pairs(rng):
    with pytest.raises(ValidationError):
        fit_raw(rng.standard_normal((5, 3, 3)), rng.standard_normal(5), 1)


def test_benchmark_kind_validation():
    with pytest.raises(ValidationError):
        BenchmarkKind("ridge")
    with pytest.raises(ValidationError):
        BenchmarkKind("vec_lasso", lasso_lambda_grid=(0.1, -1.0))
