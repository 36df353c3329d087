"""Supervised correlation screening of the predictor matrix.

Rows and columns of ``X_t`` whose average absolute correlation with the
target falls below a threshold are dropped before factor extraction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core_types import MatrixSeries, ScalarSeries, ValidationError


class ZeroVarianceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ScreenResult:
    corr: np.ndarray
    row_means: np.ndarray
    col_means: np.ndarray
    kept_rows: tuple
    kept_cols: tuple
    row_threshold: float
    col_threshold: float
    zero_variance: np.ndarray = None

    def __post_init__(self):
        if np.any(np.abs(self.corr) > 1 + 1e-12):
            raise ValidationError("correlations must lie in [-1, 1]")
        if not self.kept_rows or not self.kept_cols:
            raise ValidationError("screening must keep at least one row and one column")

    def scree(self):
        """Row and column means sorted in descending order, with their indices."""
        ri = np.argsort(-self.row_means, kind="stable")
        ci = np.argsort(-self.col_means, kind="stable")
        return (ri, self.row_means[ri]), (ci, self.col_means[ci])


def _arrays(series, target):
    X = series.values if isinstance(series, MatrixSeries) else np.asarray(series, dtype=float)
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, dtype=float)
    if X.ndim != 3 or X.shape[0] != y.size:
        raise ValidationError(f"predictors {X.shape} and target {y.shape} are not aligned")
    return X, y


def correlation_map(series, target, return_flags: bool = False):
    """Pearson correlation of every entry series ``x_{ij,t}`` with ``y_t``.

    Entry series with zero variance get correlation 0 and raise a
    :class:`ZeroVarianceWarning`.
    """
    X, y = _arrays(series, target)
    if y.size < 3:
        raise ValidationError("correlation screening needs T >= 3")
    yc = y - y.mean()
    sy = np.sqrt(yc @ yc)
    if sy == 0:
        raise ValidationError("target has zero variance")
    Xc = X - X.mean(axis=0)
    sx = np.sqrt(np.einsum("tij,tij->ij", Xc, Xc))
    cov = np.einsum("tij,t->ij", Xc, yc)
    flat = sx <= 1e-14 * max(np.max(sx), 1e-300)
    with np.errstate(invalid="ignore", divide="ignore"):
        rho = np.where(flat, 0.0, cov / (np.where(flat, 1.0, sx) * sy))
    rho = np.clip(rho, -1.0, 1.0)
    if flat.any():
        warnings.warn(f"{int(flat.sum())} constant entry series given correlation 0", ZeroVarianceWarning, stacklevel=2)
    return (rho, flat) if return_flags else rho


def screen(series, target, row_threshold: float, col_threshold: float | None = None) -> ScreenResult:
    """Compute the screening diagnostics without slicing the data."""
    if col_threshold is None:
        col_threshold = row_threshold
    for th in (row_threshold, col_threshold):
        if not 0 <= th < 1:
            raise ValidationError(f"thresholds must lie in [0, 1), got {th}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ZeroVarianceWarning)
        rho, flat = correlation_map(series, target, return_flags=True)
    row_means = np.abs(rho).mean(axis=1)
    col_means = np.abs(rho).mean(axis=0)
    rows = tuple(int(i) for i in np.flatnonzero(row_means >= row_threshold))
    cols = tuple(int(j) for j in np.flatnonzero(col_means >= col_threshold))
    if not rows:
        raise ValidationError(
            f"all rows removed (max row mean {row_means.max():.4f} < {row_threshold}); lower the row threshold"
        )
    if not cols:
        raise ValidationError(
            f"all columns removed (max column mean {col_means.max():.4f} < {col_threshold}); lower the column threshold"
        )
    return ScreenResult(rho, row_means, col_means, rows, cols, float(row_threshold), float(col_threshold), flat)


def refine(series, target, row_threshold: float, col_threshold: float | None = None):
    """Drop weakly correlated rows and columns.

    Returns the refined series (shape ``p~ x q~``) and the diagnostics.
    ``col_threshold`` defaults to ``row_threshold``.
    """
    res = screen(series, target, row_threshold, col_threshold)
    X, _ = _arrays(series, target)
    sub = X[:, list(res.kept_rows)][:, :, list(res.kept_cols)]
    idx = series.time_index if isinstance(series, MatrixSeries) else None
    return MatrixSeries(sub, idx), res
