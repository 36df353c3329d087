"""alpha-PCA factor extraction for matrix-valued time series.

The row and column moment matrices mix the outer product of the sample
mean with the sample covariance,

    M_R = 1/(pq) [ (1 + alpha) Xbar Xbar' + 1/T sum_t (X_t - Xbar)(X_t - Xbar)' ]

and analogously for ``M_C``.  They are computed from the shifted data
``X*_t = X_t + (sqrt(1 + alpha) - 1) Xbar`` as ``1/(pqT) sum_t X*_t X*_t'``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core_types import FactorEstimate, MatrixSeries, MomentMatrices, ValidationError, project_factors
from .linalg import sym_eig


def _values(series) -> np.ndarray:
    if isinstance(series, MatrixSeries):
        return series.values
    X = np.asarray(series, dtype=float)
    if X.ndim != 3:
        raise ValidationError(f"expected a T x p x q array, got shape {X.shape}")
    return X


def shifted_data(X: np.ndarray, alpha_weight: float) -> np.ndarray:
    """``X*_t = X_t + (sqrt(alpha+1) - 1) * Xbar``."""
    if alpha_weight < -1:
        raise ValidationError(f"alpha_weight must be >= -1, got {alpha_weight}")
    shift = math.sqrt(alpha_weight + 1.0) - 1.0
    return X + shift * X.mean(axis=0)


def moment_matrices(series, alpha_weight: float = 0.0) -> MomentMatrices:
    X = _values(series)
    T, p, q = X.shape
    Xs = shifted_data(X, alpha_weight)
    flat_rows = Xs.transpose(1, 0, 2).reshape(p, T * q)
    flat_cols = Xs.transpose(2, 0, 1).reshape(q, T * p)
    M_R = flat_rows @ flat_rows.T / (p * q * T)
    M_C = flat_cols @ flat_cols.T / (p * q * T)
    M_R = 0.5 * (M_R + M_R.T)
    M_C = 0.5 * (M_C + M_C.T)
    return MomentMatrices(M_R, M_C, alpha_weight)


def moment_matrices_direct(series, alpha_weight: float = 0.0):
    """Mean-plus-covariance form of the moment matrices (reference path)."""
    X = _values(series)
    T, p, q = X.shape
    Xbar = X.mean(axis=0)
    D = X - Xbar
    M_R = ((1 + alpha_weight) * Xbar @ Xbar.T + np.einsum("tij,tkj->ik", D, D) / T) / (p * q)
    M_C = ((1 + alpha_weight) * Xbar.T @ Xbar + np.einsum("tji,tjk->ik", D, D) / T) / (p * q)
    return M_R, M_C


def fit(series, k: int, r: int, alpha_weight: float = 0.0) -> FactorEstimate:
    """Estimate loadings and factors with fixed factor dimensions ``(k, r)``.

    ``R_hat`` is ``sqrt(p)`` times the top-``k`` eigenvectors of ``M_R``,
    ``C_hat`` is ``sqrt(q)`` times the top-``r`` eigenvectors of ``M_C`` and
    ``F_hat[t] = R_hat' X_t C_hat / (pq)``.
    """
    X = _values(series)
    T, p, q = X.shape
    if not (1 <= k <= p and 1 <= r <= q):
        raise ValidationError(f"need 1 <= k <= p and 1 <= r <= q; got k={k}, r={r} for p={p}, q={q}")
    mom = moment_matrices(X, alpha_weight)
    eR = sym_eig(mom.M_R)
    eC = sym_eig(mom.M_C)
    lam_R = eR.eigenvalues[:k]
    lam_C = eC.eigenvalues[:r]
    tol_R = 1e-12 * max(abs(eR.eigenvalues[0]), 1e-300)
    tol_C = 1e-12 * max(abs(eC.eigenvalues[0]), 1e-300)
    if eR.eigenvalues[0] <= 0 or eC.eigenvalues[0] <= 0:
        raise ValidationError("moment matrices are zero: top eigenvectors are undefined")
    if lam_R[-1] <= tol_R or lam_C[-1] <= tol_C:
        raise ValidationError(
            f"requested (k, r) = ({k}, {r}) exceeds the numerical rank of the moment matrices"
        )
    R_hat = math.sqrt(p) * eR.eigenvectors[:, :k]
    C_hat = math.sqrt(q) * eC.eigenvectors[:, :r]
    F_hat = project_factors(R_hat, C_hat, X)
    return FactorEstimate(R_hat, C_hat, F_hat, np.clip(lam_R, 0, None), np.clip(lam_C, 0, None), alpha_weight)


@dataclass(frozen=True)
class DimSelectConfig:
    k_max: int
    r_max: int
    fallback_rule: str = "second_largest_ratio"

    def __post_init__(self):
        if self.k_max < 1 or self.r_max < 1:
            raise ValidationError("k_max and r_max must be >= 1")
        if self.fallback_rule != "second_largest_ratio":
            raise ValidationError(f"unknown fallback rule {self.fallback_rule!r}")

    @classmethod
    def default(cls, p: int, q: int) -> "DimSelectConfig":
        return cls(max(1, min(math.ceil(p / 2), p - 1)), max(1, min(math.ceil(q / 2), q - 1)))

    def check(self, p: int, q: int) -> None:
        if not (self.k_max <= p - 1 and self.r_max <= q - 1):
            raise ValidationError(f"need k_max <= p-1 and r_max <= q-1 (p={p}, q={q})")


class RatioChoice(NamedTuple):
    index: int  # 1-based dimension
    ratios: np.ndarray
    used_fallback: bool


class DimEstimate(NamedTuple):
    k_hat: int
    r_hat: int
    row: RatioChoice = None
    col: RatioChoice = None


def _local_maxima(x: np.ndarray) -> list:
    n = x.size
    out = []
    for j in range(n):
        left = x[j - 1] if j > 0 else -np.inf
        right = x[j + 1] if j < n - 1 else -np.inf
        if x[j] > left and x[j] > right:
            out.append(j)
    return out


def ratio_estimator(eigenvalues, j_max: int) -> RatioChoice:
    """Eigenvalue-ratio choice ``argmax_{1<=j<=j_max} lam_j / lam_{j+1}``.

    A zero ``lam_{j+1}`` (with ``lam_j > 0``) means the spectrum has exact
    rank ``j``; that ``j`` is returned.  When the ratio sequence has exactly
    one local maximum, the index of the second-largest ratio is returned
    instead and ``used_fallback`` is set.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    j_max = min(int(j_max), lam.size - 1)
    if j_max < 1:
        raise ValidationError("need at least two eigenvalues")
    scale = max(lam[0], 0.0)
    if scale <= 0 or np.sum(lam > 1e-12 * scale) < 1:
        raise ValidationError("fewer than 2 positive eigenvalues")
    tiny = 1e-12 * scale
    head = lam[: j_max + 1]
    ratios = np.empty(j_max)
    for j in range(j_max):
        if head[j + 1] <= tiny:
            if head[j] > tiny:
                ratios[j] = np.inf
                ratios[j + 1:] = np.nan
                return RatioChoice(j + 1, ratios, False)
            raise ValidationError("fewer than 2 positive eigenvalues")
        ratios[j] = head[j] / head[j + 1]
    order = np.argsort(-ratios, kind="stable")
    if j_max >= 2 and len(_local_maxima(ratios)) == 1:
        return RatioChoice(int(order[1]) + 1, ratios, True)
    return RatioChoice(int(order[0]) + 1, ratios, False)


def estimate_dims(series, alpha_weight: float = 0.0, cfg: DimSelectConfig | None = None) -> DimEstimate:
    X = _values(series)
    _, p, q = X.shape
    if p < 3 or q < 3:
        raise ValidationError("dimension selection needs p >= 3 and q >= 3")
    cfg = cfg or DimSelectConfig.default(p, q)
    cfg.check(p, q)
    mom = moment_matrices(X, alpha_weight)
    row = ratio_estimator(sym_eig(mom.M_R).eigenvalues, cfg.k_max)
    col = ratio_estimator(sym_eig(mom.M_C).eigenvalues, cfg.r_max)
    return DimEstimate(row.index, col.index, row, col)
