import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from matrix_di.core_types import FactorKind, NoiseKind, ValidationError
from matrix_di.screening import screen
from matrix_di.simulate import (
    SimConfig,
    draw_noise,
    draw_structure,
    gen_replication,
    normalize_loading,
    planted_fixture,
    rng_for,
    row_col_covariances,
    run_cell,
    run_normality,
    table1_grid,
    table2_grid,
)


def test_normalized_loading(rng):
    L = normalize_loading(rng.uniform(-1, 1, (12, 3)))
    assert_allclose(L.T @ L / 12, np.eye(3), atol=1e-12)


def test_row_col_covariance_values():
    U, V = row_col_covariances(4, 10)
    assert_allclose(np.diag(U), 1.0)
    assert_allclose(U[0, 1], 0.25)
    assert_allclose(V[2, 7], 0.1)


def test_row_col_noise_covariance():
    cfg = SimConfig(p=3, q=2, k=1, r=1, noise_kind=NoiseKind.ROW_COL_CORR)
    rng = rng_for(1, 2)
    st = draw_structure(cfg, rng)
    E = draw_noise(cfg, st, rng, 100000)
    emp = np.cov(E.transpose(0, 2, 1).reshape(100000, -1), rowvar=False)
    U, V = row_col_covariances(3, 2)
    assert np.max(np.abs(emp - np.kron(V, U))) < 0.01


def test_generation_is_reproducible():
    cfg = SimConfig(p=5, q=4, k=2, r=1, T=30, factor_kind="mar1", noise_kind="mar1_noise")
    t1, X1, y1 = gen_replication(cfg, 3)
    t2, X2, y2 = gen_replication(cfg, 3)
    assert_array_equal(X1.values, X2.values)
    assert_array_equal(y1.values, y2.values)
    _, X3, _ = gen_replication(cfg, 4)
    assert not np.array_equal(X1.values, X3.values)


def test_noiseless_target_is_bilinear_in_lagged_factors():
    cfg = SimConfig(p=5, q=4, k=2, r=2, T=20, horizon=2, noise_scale=0.0)
    truth, X, y = gen_replication(cfg, 0)
    # X_t carries F_t exactly; y_{t+2} loads on F_t up to unit-variance noise
    assert_allclose(X.values, np.einsum("ik,tkl,jl->tij", truth.R, truth.F_series, truth.C), atol=1e-12)
    signal = np.einsum("k,tkl,l->t", truth.alpha_vec, truth.F_series[:-2], truth.beta_vec)
    resid = y.values[2:] - signal
    assert 0.2 < resid.var() < 3.0


def test_results_do_not_depend_on_worker_count():
    cfg = SimConfig(p=5, q=5, k=2, r=2, T=40, replications=4)
    assert run_cell(cfg, 1) == run_cell(cfg, 2)


def test_grid_sizes():
    g1, g2 = table1_grid(), table2_grid()
    assert len(g1) == 54 and len(g2) == 72
    assert {c.T for c in g1 if (c.p, c.q) == (5, 10)} == {25, 50, 100}


def test_config_validation():
    with pytest.raises(ValidationError):
        SimConfig(p=2, k=3)
    with pytest.raises(ValidationError):
        SimConfig(alpha_weight=-2)
    assert SimConfig(noise_kind="mar1_noise").noise_kind is NoiseKind.MAR1
    assert SimConfig(factor_kind="mar1").factor_kind is FactorKind.MAR1


def test_normality_columns():
    cfg = SimConfig(p=6, q=6, k=2, r=2, T=60)
    res = run_normality(cfg, replications=12)
    assert len(res.columns) == 9
    assert all(v.size == 12 for v in res.standardized.values())
    z = res.standardized[("alpha_1", 0.0)]
    assert abs(z.mean()) < 1e-12 and abs(z.std(ddof=1) - 1) < 1e-12


def test_normality_flags_degenerate_column():
    cfg = SimConfig(p=6, q=6, k=1, r=1, T=60, noise_scale=0.0)
    res = run_normality(cfg, replications=6, alphas=(0.0,), zero_target_noise=True)
    assert res.degenerate[("alpha_1", 0.0)]
    assert np.isnan(res.qq_correlation("alpha_1", 0.0))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_planted_fixture_screening_recovers_signal(seed):
    fx = planted_fixture(seed)
    assert fx.X.shape == (107, 14, 10) and fx.y.shape == (107,)
    # same-time correlations on the first training window of the rolling CV
    res = screen(fx.X[:86], fx.y[:86], 0.2, 0.2)
    assert res.kept_rows == fx.signal_rows and res.kept_cols == fx.signal_cols
