"""Comparison forecasters: raw bilinear, vectorised OLS / Lasso and AR(1)."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .bilinear_lse import LseConfig, fit_bilinear
from .core_types import LoadingEstimate, ScalarSeries, ValidationError, validate
from .evaluate import fold_sizes

log = logging.getLogger(__name__)

BENCHMARK_KINDS = ("raw_bilinear", "vec_ols", "vec_lasso", "ar1")


def _pairs(series, target, h):
    pairs = validate(series, target, h)
    return pairs.predictors, pairs.targets


def fit_raw(series, target, h: int = 1, cfg: LseConfig | None = None) -> LoadingEstimate:
    """Bilinear regression ``y_{t+h} = a' X_t b`` on the untransformed data."""
    X, y = _pairs(series, target, h)
    _, p, q = X.shape
    if y.size < p + q:
        raise ValidationError(f"raw bilinear model needs T - h >= p + q = {p + q}, got {y.size}")
    return fit_bilinear(X, y, cfg)


def fit_vec_ols(series, target, h: int = 1) -> np.ndarray:
    """Minimum-norm least squares of ``y_{t+h}`` on ``vec(X_t)``.

    ``vec`` stacks columns, so coefficient ``i + j*p`` belongs to entry ``(i, j)``.
    """
    X, y = _pairs(series, target, h)
    D = vec_design(X)
    coef, *_ = np.linalg.lstsq(D, y, rcond=None)
    return coef


def vec_design(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return X.transpose(0, 2, 1).reshape(X.shape[0], -1)


# --- Lasso ----------------------------------------------------------------------


class LassoPath(NamedTuple):
    coef: np.ndarray
    objective_trace: tuple
    converged: bool


def soft_threshold(z, lam):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


def lambda_max(D, y) -> float:
    """Smallest penalty giving the all-zero solution (columns scaled to unit mean square)."""
    D = np.asarray(D, float)
    scale = np.sqrt(np.mean(D**2, axis=0))
    scale[scale == 0] = 1.0
    return float(np.max(np.abs((D / scale).T @ y)) / y.size)


def _scaled(D):
    scale = np.sqrt(np.mean(D**2, axis=0))
    live = scale > 0
    return D / np.where(live, scale, 1.0), np.where(live, scale, 1.0), live


def lasso_cd(D, y, lam: float, max_iter: int = 100000, tol: float = 1e-12,
             warm_start=None) -> LassoPath:
    """Coordinate descent for ``1/(2n) ||y - D b||^2 + lam ||b||_1``.

    Columns are scaled to unit mean square before penalisation and the
    coefficients are returned on the original scale.  No intercept.  Uses
    the covariance (Gram) form of the updates; stops when the largest
    coordinate move in a sweep is below ``tol`` times the largest
    coefficient.
    """
    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    n, m = D.shape
    if lam < 0:
        raise ValidationError("lasso penalty must be >= 0")
    Z, scale, live = _scaled(D)
    G = Z.T @ Z / n
    c = Z.T @ y / n
    b = np.zeros(m) if warm_start is None else np.asarray(warm_start, float) * scale
    b[~live] = 0.0
    Gb = G @ b
    yy = y @ y / n

    def objective():
        return 0.5 * (yy - 2 * c @ b + b @ Gb) + lam * np.abs(b).sum()

    trace = [objective()]
    idx = np.flatnonzero(live)
    for _ in range(max_iter):
        max_step = 0.0
        for j in idx:
            old = b[j]
            # G[j, j] == 1 after scaling
            new = soft_threshold(c[j] - Gb[j] + old, lam)
            if new != old:
                Gb += G[:, j] * (new - old)
                b[j] = new
                max_step = max(max_step, abs(new - old))
        trace.append(objective())
        if max_step <= tol * max(1.0, np.max(np.abs(b))):
            return LassoPath(b / scale, tuple(trace), True)
    raise ValidationError(f"lasso coordinate descent did not converge in {max_iter} sweeps")


def lasso_path_fast(D, y, grid, tol: float = 1e-6, max_iter: int = 100000) -> np.ndarray:
    """Solutions along a decreasing penalty grid, one column per penalty.

    Same objective and scaling as :func:`lasso_cd`, solved by scikit-learn's
    compiled coordinate descent.
    """
    from sklearn.exceptions import ConvergenceWarning
    from sklearn.linear_model import lasso_path

    D = np.asarray(D, dtype=float)
    y = np.asarray(y, dtype=float)
    Z, scale, live = _scaled(D)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        try:
            _, coefs, _ = lasso_path(Z[:, live], y, alphas=np.asarray(grid, float), tol=tol, max_iter=max_iter)
        except ConvergenceWarning as exc:
            raise ValidationError(f"lasso coordinate descent did not converge: {exc}") from None
    out = np.zeros((D.shape[1], len(grid)))
    out[live] = coefs / scale[live, None]
    return out


def lambda_grid(D, y, n: int = 50, ratio: float = 1e-4) -> np.ndarray:
    lm = lambda_max(D, y)
    if lm == 0:
        return np.array([0.0])
    return np.geomspace(lm, ratio * lm, n)


@dataclass(frozen=True)
class BenchmarkKind:
    kind: str
    lasso_lambda_grid: tuple = ()
    lasso_cv_folds: int = 5
    lse: LseConfig = field(default_factory=LseConfig)

    def __post_init__(self):
        if self.kind not in BENCHMARK_KINDS:
            raise ValidationError(f"unknown benchmark {self.kind!r}")
        if any(lam <= 0 for lam in self.lasso_lambda_grid):
            raise ValidationError("lasso penalties must be positive")

    @property
    def min_train(self) -> int:
        return 3

    def fit(self, X, y, horizon):
        if self.kind == "raw_bilinear":
            return _BilinearFit(fit_raw(X, y, horizon, self.lse))
        if self.kind == "vec_ols":
            return _LinearFit(fit_vec_ols(X, y, horizon))
        if self.kind == "vec_lasso":
            coef, _ = fit_vec_lasso(X, y, horizon, self)
            return _LinearFit(coef)
        return _ArFit(fit_ar1(y), horizon)


def fit_vec_lasso(series, target, h: int = 1, cfg: BenchmarkKind | None = None):
    """Lasso on ``vec(X_t)`` with the penalty chosen by rolling CV on the training span.

    Returns ``(coefficients, chosen_lambda)``.  With an empty grid in
    ``cfg``, 50 log-spaced values from ``lambda_max`` down to
    ``1e-4 * lambda_max`` are used.
    """
    cfg = cfg or BenchmarkKind("vec_lasso")
    X, y = _pairs(series, target, h)
    D = vec_design(X)
    grid = np.asarray(cfg.lasso_lambda_grid, float) if cfg.lasso_lambda_grid else lambda_grid(D, y)
    if grid.size == 0:
        raise ValidationError("empty lambda grid")
    grid = np.sort(grid)[::-1]
    pick = 0 if grid.size == 1 else _lasso_cv_pick(D, y, grid, cfg.lasso_cv_folds)
    coef = lasso_path_fast(D, y, grid[: pick + 1])[:, pick]
    return coef, float(grid[pick])


def _lasso_cv_pick(D, y, grid, n_folds) -> int:
    n = y.size
    n_val = max(n_folds, int(round(0.2 * n)))
    n_val = min(n_val, n - 2)
    if n_val < n_folds:
        return len(grid) - 1
    errs = np.zeros(len(grid))
    start = n - n_val
    for size in fold_sizes(n_val, n_folds):
        stop = start + size
        coefs = lasso_path_fast(D[:start], y[:start], grid)
        resid = y[start:stop, None] - D[start:stop] @ coefs
        errs += np.sum(resid**2, axis=0)
        start = stop
    return int(np.argmin(errs))


# --- AR(1) ------------------------------------------------------------------------


def fit_ar1(target) -> float:
    """No-intercept OLS slope of ``y_{t+1}`` on ``y_t``."""
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, dtype=float)
    if y.size < 3:
        raise ValidationError("AR(1) needs at least 3 observations")
    x0 = y[:-1]
    den = x0 @ x0
    if den == 0 or np.ptp(y) == 0:
        raise ValidationError("target has zero variance")
    return float(x0 @ y[1:] / den)


class _BilinearFit:
    def __init__(self, est: LoadingEstimate):
        self.est = est

    def predict(self, X_rows, y_rows=None):
        return np.einsum("i,tij,j->t", self.est.alpha_vec, np.asarray(X_rows, float), self.est.beta_vec)


class _LinearFit:
    def __init__(self, coef):
        self.coef = np.asarray(coef, float)

    def predict(self, X_rows, y_rows=None):
        return vec_design(X_rows) @ self.coef


class _ArFit:
    def __init__(self, phi: float, horizon: int):
        self.phi = phi
        self.horizon = horizon

    def predict(self, X_rows, y_rows):
        return self.phi**self.horizon * np.asarray(y_rows, float)
