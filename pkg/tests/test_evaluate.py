import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose
from scipy.stats import norm

from matrix_di import alpha_pca, bilinear_lse, evaluate
from matrix_di.core_types import LoadingEstimate, SimTruth, ValidationError
from matrix_di.evaluate import (
    ExactMatchError,
    cv_layout,
    dm_test,
    factor_loss,
    fold_sizes,
    kron_loss,
    msfe,
    rolling_cv,
    rotations,
)
from matrix_di.simulate import normalize_loading


def _truth(R, C, F, a=None, b=None):
    k, r = R.shape[1], C.shape[1]
    a = np.eye(k)[0] if a is None else a
    b = np.ones(r) if b is None else b
    return SimTruth(R, C, F, a, b, "iid", "matrix_normal", np.zeros((k, k)), np.zeros((r, r)),
                    np.zeros((R.shape[0],) * 2), np.zeros((C.shape[0],) * 2))


def test_msfe_examples(rng):
    assert msfe([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert msfe([0.0, 0.0], [1.0, 3.0]) == 5.0
    assert abs(msfe(np.zeros(200000), rng.standard_normal(200000)) - 1.0) < 0.02
    with pytest.raises(ValidationError):
        msfe([], [])
    with pytest.raises(ValidationError):
        msfe([1.0], [1.0, 2.0])


def test_fold_layout_for_107():
    assert fold_sizes(21, 10) == [3, 2, 2, 2, 2, 2, 2, 2, 2, 2]
    bounds = cv_layout(107, 1, 10, 0.2)
    assert bounds[0] == (85, 88) and bounds[-1] == (104, 106)
    assert sum(b - a for a, b in bounds) == 21
    with pytest.raises(ValidationError):
        fold_sizes(3, 10)


def _noiseless_case(rng, alpha=-1.0, T=80):
    R = normalize_loading(rng.uniform(-1, 1, (8, 3)))
    C = normalize_loading(rng.uniform(-1, 1, (6, 2)))
    F = rng.standard_normal((T, 3, 2))
    X = np.einsum("ik,tkl,jl->tij", R, F, C)
    return R, C, F, X, alpha_pca.fit(X, 3, 2, alpha)


def test_noiseless_rotation_is_orthogonal(rng):
    R, C, F, X, est = _noiseless_case(rng)
    rot = rotations(_truth(R, C, F), est)
    assert np.linalg.norm(rot.H_R.T @ rot.H_R - np.eye(3)) < 1e-6
    assert np.linalg.norm(rot.H_C.T @ rot.H_C - np.eye(2)) < 1e-6
    # least-squares alignment oracle: R_hat = R H_R
    H_ls, *_ = np.linalg.lstsq(R, est.R_hat, rcond=None)
    assert_allclose(rot.H_R, H_ls, atol=1e-8)
    assert np.max(factor_loss(_truth(R, C, F), est, rot)) < 1e-8


def test_exact_estimates_give_zero_factor_loss(rng):
    R = normalize_loading(rng.uniform(-1, 1, (6, 2)))
    C = normalize_loading(rng.uniform(-1, 1, (5, 2)))
    F = rng.standard_normal((30, 2, 2))
    # estimated factors equal to the truth, identity rotations
    rot = evaluate.RotationPair(np.eye(2), np.eye(2), np.ones(2), np.ones(2))
    class _Est:
        F_hat = F
    assert np.max(factor_loss(_truth(R, C, F), _Est, rot)) < 1e-10


def test_scalar_rotation_chain(rng):
    T, p, q = 40, 5, 4
    R = rng.uniform(-1, 1, (p, 1))
    C = rng.uniform(-1, 1, (q, 1))
    F = rng.standard_normal((T, 1, 1))
    X = np.einsum("ik,tkl,jl->tij", R, F, C) + 0.1 * rng.standard_normal((T, p, q))
    est = alpha_pca.fit(X, 1, 1, 0.0)
    rot = rotations(_truth(R, C, F), est)
    f = F[:, 0, 0]
    h_r = (f @ f) / T * (C[:, 0] @ C[:, 0]) * (R[:, 0] @ est.R_hat[:, 0]) / (p * q) / est.eig_R[0]
    h_c = (f @ f) / T * (R[:, 0] @ R[:, 0]) * (C[:, 0] @ est.C_hat[:, 0]) / (p * q) / est.eig_C[0]
    assert_allclose(rot.H_R[0, 0], h_r, rtol=1e-12)
    assert_allclose(rot.H_C[0, 0], h_c, rtol=1e-12)
    loss = factor_loss(_truth(R, C, F), est, rot)
    assert_allclose(loss, np.abs(est.F_hat[:, 0, 0] - f / (h_r * h_c)), rtol=1e-10)


def test_factor_loss_matches_two_by_two_singular_values(rng):
    F = rng.standard_normal((3, 2, 2))
    Fh = rng.standard_normal((3, 2, 2))
    rot = evaluate.RotationPair(np.eye(2), np.eye(2), np.ones(2), np.ones(2))

    class _Est:
        F_hat = Fh
    loss = factor_loss(_truth(np.ones((2, 2)) * [1, -1], np.ones((2, 2)) * [1, -1], F), _Est, rot)
    for t in range(3):
        D = Fh[t] - F[t]
        # largest singular value of a 2x2 matrix in closed form
        s2 = 0.5 * (np.sum(D**2) + math.sqrt(np.sum(D**2) ** 2 - 4 * np.linalg.det(D) ** 2))
        assert_allclose(loss[t], math.sqrt(s2), rtol=1e-12)


def test_kron_loss_and_rescaling(rng):
    R, C, F, X, est = _noiseless_case(rng, alpha=0.0)
    a = np.array([0.6, 0.8, 0.0])
    truth = _truth(R, C, F, a, np.array([1.0, -1.0]))
    rot = rotations(truth, est)
    le = LoadingEstimate(np.array([0.0, 0.6, 0.8]), np.array([2.0, 1.0]))
    target = np.kron(rot.H_C.T @ truth.beta_vec, rot.H_R.T @ truth.alpha_vec)
    direct = math.log(np.sum((np.kron(le.beta_vec, le.alpha_vec) - target) ** 2))
    assert_allclose(kron_loss(truth, est, le, rot), direct, rtol=1e-12)
    # (c, 1/c) rescaling leaves the Kronecker product unchanged; c a power of 2 keeps it exact
    class _Scaled:
        alpha_vec = 2.0 * le.alpha_vec
        beta_vec = 0.5 * le.beta_vec
    assert kron_loss(truth, est, _Scaled, rot) == kron_loss(truth, est, le, rot)


def test_kron_loss_exact_match_raises(rng):
    R, C, F, X, est = _noiseless_case(rng)
    truth = _truth(R, C, F, np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0]))
    rot = evaluate.RotationPair(np.eye(3), np.eye(2), np.ones(3), np.ones(2))
    le = LoadingEstimate(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0]))
    with pytest.raises(ExactMatchError):
        kron_loss(truth, est, le, rot)


def test_rotation_pair_flags_degenerate():
    rp = evaluate.RotationPair(np.diag([1.0, 1e-10]), np.eye(1), np.ones(2), np.ones(1))
    assert rp.degenerate
    with pytest.raises(ValidationError):
        evaluate.RotationPair(np.eye(1), np.eye(1), np.zeros(1), np.ones(1))


def _dm_oracle(a, b):
    d = np.asarray(a) - np.asarray(b)
    n = d.size
    var = np.sum((d - d.mean()) ** 2) / n
    stat = d.mean() / math.sqrt(var / n)
    return stat, 2 * (1 - norm.cdf(abs(stat)))


def test_dm_hand_case():
    a = np.array([1.0, 2.0, 0.5, 3.0, 1.5, 2.5])
    b = np.array([1.5, 1.0, 1.0, 1.0, 1.0, 1.0])
    d = a - b  # (-0.5, 1, -0.5, 2, 0.5, 1.5), mean 2/3
    var = np.mean((d - 2 / 3) ** 2)
    res = dm_test(a, b, 1)
    assert_allclose(res.statistic, (2 / 3) / math.sqrt(var / 6), rtol=1e-12)


def test_dm_identical_and_antisymmetric(rng):
    a = rng.random(30)
    assert dm_test(a, a).statistic == 0.0 and dm_test(a, a).p_value == 1.0
    b = rng.random(30)
    assert_allclose(dm_test(a, b).statistic, -dm_test(b, a).statistic, rtol=1e-14)
    assert 0 < dm_test(a, b).p_value <= 1
    with pytest.raises(ValidationError):
        dm_test(a[:4], b[:4])
    with pytest.raises(ValidationError, match="zero variance"):
        dm_test(np.ones(10), np.zeros(10))


def test_dm_matches_oracle_on_random_pairs():
    g = np.random.default_rng(2024)
    for _ in range(50):
        n = int(g.integers(5, 200))
        a, b = g.random(n), g.random(n)
        res = dm_test(a, b, 1)
        stat, p = _dm_oracle(a, b)
        assert abs(res.statistic - stat) < 1e-10
        assert abs(res.p_value - p) < 1e-10


def test_dm_bartlett_lag_for_longer_horizon(rng):
    a, b = rng.random(40), rng.random(40)
    d = a - b
    dc = d - d.mean()
    lrv = dc @ dc / 40 + 2 * (1 - 1 / 2) * (dc[1:] @ dc[:-1]) / 40
    assert_allclose(dm_test(a, b, 2).statistic, d.mean() / math.sqrt(lrv / 40), rtol=1e-12)


class _ConstModel:
    min_train = 1

    def fit(self, X, y, h):
        c = y[-1]

        class _F:
            def predict(self, X_rows, y_rows):
                return np.full(len(X_rows), c)
        return _F()


def test_rolling_cv_constant_target():
    X = np.random.default_rng(0).standard_normal((107, 2, 2))
    rep = rolling_cv(X, np.full(107, 4.2), _ConstModel(), 1)
    assert np.all(rep.fold_msfe == 0) and rep.mean_msfe == 0
    assert [len(p) for p in rep.predictions] == [3] + [2] * 9


class _Recorder:
    min_train = 1

    def __init__(self):
        self.seen = []

    def fit(self, X, y, h):
        self.seen.append(len(y))
        return _ConstModel().fit(X, y, h)


def test_rolling_cv_uses_only_past_data():
    rec = _Recorder()
    rep = rolling_cv(np.zeros((107, 1, 1)), np.arange(107.0), rec, 1)
    # each refit sees targets up to, not including, the fold's first target
    for n, idx in zip(rec.seen, rep.pair_index):
        assert n == idx[0] + 1
    assert_allclose(rep.mean_msfe, rep.fold_msfe.mean())


def test_rolling_cv_insufficient_data():
    with pytest.raises(ValidationError):
        rolling_cv(np.zeros((20, 1, 1)), np.zeros(20), _ConstModel(), 1, min_train=50)
