"""Loss metrics against rotated truth, forecast accuracy and comparison tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .core_types import FactorEstimate, LoadingEstimate, MatrixSeries, ScalarSeries, SimTruth, ValidationError
from .linalg import kron, spectral_norm


class ExactMatchError(ArithmeticError):
    """The estimate equals the target exactly, so the log loss is -inf."""


@dataclass(frozen=True)
class RotationPair:
    H_R: np.ndarray
    H_C: np.ndarray
    V_R: np.ndarray
    V_C: np.ndarray
    degenerate: bool = False

    def __post_init__(self):
        if np.any(self.V_R <= 0) or np.any(self.V_C <= 0):
            raise ValidationError("V_R and V_C must be strictly positive")
        if not (np.all(np.isfinite(self.H_R)) and np.all(np.isfinite(self.H_C))):
            raise ValidationError("rotation matrices must be finite")
        cond = max(np.linalg.cond(self.H_R), np.linalg.cond(self.H_C))
        object.__setattr__(self, "degenerate", bool(self.degenerate or not cond < 1e8))

    def rotate_factors(self, F) -> np.ndarray:
        """``H_R^{-1} F_t H_C^{-1}'`` for every ``t``."""
        iR = np.linalg.inv(self.H_R)
        iC = np.linalg.inv(self.H_C)
        return np.einsum("ij,...jk,lk->...il", iR, np.asarray(F, float), iC)


def rotations(truth: SimTruth, est: FactorEstimate) -> RotationPair:
    """Rotation matrices linking the estimated and the true loadings.

    ``H_R = 1/(pqT) sum_t Ft_t C'C Ft_t' R' R_hat V_R^{-1}`` with
    ``Ft_t = F_t + (sqrt(alpha+1)-1) Fbar`` and ``V_R`` the top eigenvalues
    of ``M_R``; ``H_C`` is the column analogue.
    """
    R, C, F = truth.R, truth.C, truth.F_series
    p, k = R.shape
    q, r = C.shape
    T = F.shape[0]
    if est.R_hat.shape != (p, k) or est.C_hat.shape != (q, r) or est.F_hat.shape[0] != T:
        raise ValidationError("truth and estimate dimensions differ")
    V_R, V_C = est.eig_R, est.eig_C
    if np.any(V_R <= 0) or np.any(V_C <= 0):
        raise ValidationError("zero eigenvalue among the top k / r: rotation undefined")
    shift = math.sqrt(est.alpha_weight + 1.0) - 1.0
    Ft = F + shift * F.mean(axis=0)
    CtC = C.T @ C
    RtR = R.T @ R
    S_R = np.einsum("tij,jl,tml->im", Ft, CtC, Ft)
    S_C = np.einsum("tji,jl,tlm->im", Ft, RtR, Ft)
    H_R = S_R @ (R.T @ est.R_hat) / (p * q * T) / V_R
    H_C = S_C @ (C.T @ est.C_hat) / (p * q * T) / V_C
    return RotationPair(H_R, H_C, np.array(V_R), np.array(V_C))


def factor_loss(truth: SimTruth, est: FactorEstimate, rot: RotationPair) -> np.ndarray:
    """Per-period spectral norm ``||F_hat_t - H_R^{-1} F_t H_C^{-1}'||_2``."""
    diff = est.F_hat - rot.rotate_factors(truth.F_series)
    return np.array([spectral_norm(d) for d in diff])


def kron_loss(truth: SimTruth, est: FactorEstimate, loadings: LoadingEstimate, rot: RotationPair) -> float:
    """``log ||b_hat (x) a_hat - (H_C' b) (x) (H_R' a)||_F^2`` (natural log)."""
    target = kron(rot.H_C.T @ truth.beta_vec, rot.H_R.T @ truth.alpha_vec)
    diff = kron(loadings.beta_vec, loadings.alpha_vec) - target
    sq = float(diff @ diff)
    if sq == 0.0:
        raise ExactMatchError("exact match: log loss is -inf")
    return math.log(sq)


def msfe(pred, actual) -> float:
    pred = np.asarray(pred, dtype=float).ravel()
    actual = np.asarray(actual, dtype=float).ravel()
    if pred.size == 0 or actual.size == 0:
        raise ValidationError("msfe of empty input")
    if pred.size != actual.size:
        raise ValidationError(f"length mismatch: {pred.size} vs {actual.size}")
    d = pred - actual
    return float(d @ d / d.size)


# --- rolling cross-validation -------------------------------------------------


def fold_sizes(n: int, n_folds: int) -> list:
    """Split ``n`` points into contiguous folds; the remainder goes to the first folds."""
    if n_folds < 1 or n < n_folds:
        raise ValidationError(f"cannot split {n} test points into {n_folds} nonempty folds")
    base, extra = divmod(n, n_folds)
    return [base + (1 if i < extra else 0) for i in range(n_folds)]


def cv_layout(T: int, horizon: int = 1, n_folds: int = 10, test_fraction: float = 0.2):
    """Fold boundaries as ``(first_pair, stop_pair)`` index ranges.

    Pair ``t`` is ``(X_t, y_{t+h})``.  The test span covers the targets at
    times ``round((1 - test_fraction) T) .. T-1``.
    """
    n_train = int(round((1.0 - test_fraction) * T))
    first = n_train - horizon
    n_test = T - n_train
    if first < 1 or n_test < 1:
        raise ValidationError(f"insufficient data: T={T}, h={horizon}")
    bounds = []
    start = first
    for size in fold_sizes(n_test, n_folds):
        bounds.append((start, start + size))
        start += size
    return bounds


@dataclass(frozen=True)
class CvReport:
    fold_msfe: np.ndarray
    mean_msfe: float
    predictions: tuple
    actuals: tuple
    pair_index: tuple

    @property
    def squared_errors(self) -> np.ndarray:
        return np.concatenate([(np.asarray(p) - np.asarray(a)) ** 2 for p, a in zip(self.predictions, self.actuals)])


def rolling_cv(series, target, model, horizon: int = 1, n_folds: int = 10,
               test_fraction: float = 0.2, min_train: int | None = None) -> CvReport:
    """Out-of-sample MSFE over contiguous folds of the final test span.

    For each fold the model is refit on every observation strictly before
    the fold's first target time and then forecasts the whole fold.
    ``model`` needs a ``fit(X, y, horizon)`` method returning an object with
    ``predict(X_rows, y_rows)``.
    """
    X = series.values if isinstance(series, MatrixSeries) else np.asarray(series, dtype=float)
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, dtype=float)
    if X.shape[0] != y.size:
        raise ValidationError("series and target lengths differ")
    bounds = cv_layout(y.size, horizon, n_folds, test_fraction)
    need = min_train if min_train is not None else getattr(model, "min_train", 1)
    preds, acts, idx, scores = [], [], [], []
    for start, stop in bounds:
        if start < need:
            raise ValidationError(f"insufficient data for a fold: {start} training pairs, need {need}")
        fitted = model.fit(X[: start + horizon], y[: start + horizon], horizon)
        t = np.arange(start, stop)
        pred = np.asarray(fitted.predict(X[t], y[t]), dtype=float)
        actual = y[t + horizon]
        preds.append(pred)
        acts.append(actual)
        idx.append(tuple(int(i) for i in t))
        scores.append(msfe(pred, actual))
    scores = np.array(scores)
    return CvReport(scores, float(scores.mean()), tuple(preds), tuple(acts), tuple(idx))


# --- Diebold-Mariano -----------------------------------------------------------


@dataclass(frozen=True)
class DMResult:
    statistic: float
    p_value: float
    loss_diff: np.ndarray


def long_run_variance(d, max_lag: int) -> float:
    """Bartlett-weighted autocovariance sum with lags ``0 .. max_lag``."""
    d = np.asarray(d, dtype=float)
    n = d.size
    dc = d - d.mean()
    lrv = dc @ dc / n
    for j in range(1, max_lag + 1):
        w = 1.0 - j / (max_lag + 1.0)
        lrv += 2.0 * w * (dc[j:] @ dc[:-j]) / n
    return float(lrv)


def dm_test(loss_a: Sequence[float], loss_b: Sequence[float], horizon: int = 1) -> DMResult:
    """Diebold-Mariano test of equal predictive accuracy.

    ``d_t = loss_a[t] - loss_b[t]``; the statistic is ``mean(d) /
    sqrt(lrv / n)`` with a Bartlett long-run variance using ``h - 1`` lags,
    and the p-value is two-sided against the standard normal.  Negative
    statistics favour model ``a``.
    """
    a = np.asarray(loss_a, dtype=float)
    b = np.asarray(loss_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValidationError("loss series must be 1-d with equal lengths")
    n = a.size
    if n < 5:
        raise ValidationError(f"need at least 5 loss pairs, got {n}")
    if horizon < 1:
        raise ValidationError("horizon must be >= 1")
    d = a - b
    if not np.any(d):
        return DMResult(0.0, 1.0, d)
    lrv = long_run_variance(d, horizon - 1)
    if not lrv > 0:
        raise ValidationError("loss differential has zero variance")
    stat = float(d.mean() / math.sqrt(lrv / n))
    p = float(min(1.0, 2.0 * norm.sf(abs(stat))))
    return DMResult(stat, p, d)
