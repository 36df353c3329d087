"""Shared domain types.

Every type validates its invariants on construction and stores read-only
arrays, so instances can be shared freely between threads and processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np


class ValidationError(ValueError):
    """Raised when data violates a type invariant."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _first_nonfinite(a: np.ndarray):
    bad = np.argwhere(~np.isfinite(a))
    return tuple(int(i) for i in bad[0]) if len(bad) else None


def _check_finite(name: str, a: np.ndarray) -> None:
    idx = _first_nonfinite(a)
    if idx is not None:
        raise ValidationError(f"{name} has a non-finite entry at index {idx}")


def _sign_fix_columns(v: np.ndarray) -> np.ndarray:
    """Flip columns so the first entry that is not ~0 is positive."""
    v = np.array(v, dtype=float, copy=True)
    for j in range(v.shape[1]):
        col = v[:, j]
        scale = np.max(np.abs(col)) if col.size else 0.0
        nz = np.flatnonzero(np.abs(col) > 1e-12 * max(scale, 1e-300))
        if nz.size and col[nz[0]] < 0:
            v[:, j] = -col
    return v


def _first_nonzero_positive(v: np.ndarray, tol: float = 0.0) -> bool:
    v = np.asarray(v)
    scale = np.max(np.abs(v)) if v.size else 0.0
    nz = np.flatnonzero(np.abs(v) > tol * max(scale, 1e-300))
    return (not nz.size) or v[nz[0]] > 0


class NoiseKind(str, Enum):
    IID = "iid"
    MAR1 = "mar1_noise"
    ROW_COL_CORR = "row_col_corr"


class FactorKind(str, Enum):
    MATRIX_NORMAL = "matrix_normal"
    MAR1 = "mar1"


@dataclass(frozen=True)
class MatrixSeries:
    """A ``T x p x q`` panel of matrix observations with a time index."""

    values: np.ndarray
    time_index: tuple = None

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim != 3:
            raise ValidationError(f"values must be T x p x q, got shape {vals.shape}")
        T, p, q = vals.shape
        if T < 2 or p < 1 or q < 1:
            raise ValidationError(f"need T >= 2, p >= 1, q >= 1; got {vals.shape}")
        _check_finite("MatrixSeries.values", vals)
        idx = tuple(range(T)) if self.time_index is None else tuple(self.time_index)
        if len(idx) != T:
            raise ValidationError(f"time_index has length {len(idx)}, expected {T}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_index", idx)

    @property
    def shape(self):
        return self.values.shape

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def q(self) -> int:
        return self.values.shape[2]

    def slice_time(self, start: int, stop: int) -> "MatrixSeries":
        return MatrixSeries(self.values[start:stop], self.time_index[start:stop])

    def select(self, rows: Sequence[int], cols: Sequence[int]) -> "MatrixSeries":
        rows = np.asarray(rows, dtype=int)
        cols = np.asarray(cols, dtype=int)
        return MatrixSeries(self.values[:, rows][:, :, cols], self.time_index)


@dataclass(frozen=True)
class ScalarSeries:
    values: np.ndarray
    time_index: tuple = None

    def __post_init__(self):
        vals = _frozen(self.values)
        if vals.ndim != 1:
            raise ValidationError(f"values must be a vector, got shape {vals.shape}")
        if vals.size == 0:
            raise ValidationError("ScalarSeries is empty")
        _check_finite("ScalarSeries.values", vals)
        idx = tuple(range(vals.size)) if self.time_index is None else tuple(self.time_index)
        if len(idx) != vals.size:
            raise ValidationError(f"time_index has length {len(idx)}, expected {vals.size}")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "time_index", idx)

    @property
    def T(self) -> int:
        return self.values.size

    def slice_time(self, start: int, stop: int) -> "ScalarSeries":
        return ScalarSeries(self.values[start:stop], self.time_index[start:stop])


class AlignedPairs(NamedTuple):
    """Forecasting pairs ``(X_t, y_{t+h})`` for ``t = 0 .. T-h-1``."""

    predictors: np.ndarray  # (T-h) x p x q
    targets: np.ndarray  # (T-h,)
    horizon: int

    @property
    def n(self) -> int:
        return self.targets.size


def validate(series: MatrixSeries, target: ScalarSeries, horizon: int) -> AlignedPairs:
    """Pair each ``X_t`` with ``y_{t+h}``.

    Raises
    ------
    ValidationError
        If lengths differ, ``horizon < 1`` or no pair remains.
    """
    if isinstance(series, AlignedPairs):
        return series
    X = series.values if isinstance(series, MatrixSeries) else np.asarray(series, float)
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, float)
    if X.ndim != 3:
        raise ValidationError(f"predictors must be T x p x q, got shape {X.shape}")
    if X.shape[0] == 0 or y.size == 0:
        raise ValidationError("empty input")
    if X.shape[0] != y.size:
        raise ValidationError(f"length mismatch: {X.shape[0]} predictor matrices vs {y.size} targets")
    _check_finite("predictors", X)
    _check_finite("target", y)
    horizon = int(horizon)
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    n = y.size - horizon
    if n < 1:
        raise ValidationError(f"no usable pairs: T={y.size}, h={horizon}")
    return AlignedPairs(X[:n], y[horizon:], horizon)


def project_factors(R_hat, C_hat, X) -> np.ndarray:
    """``R_hat' X_t C_hat / (pq)`` for one matrix or a stack of matrices.

    Inputs are copied to C order first so the result does not depend on how
    the caller's arrays happen to be laid out in memory.
    """
    X = np.ascontiguousarray(X, dtype=float)
    Rt = np.ascontiguousarray(np.asarray(R_hat, dtype=float).T)
    C_hat = np.ascontiguousarray(C_hat, dtype=float)
    p, q = R_hat.shape[0], C_hat.shape[0]
    single = X.ndim == 2
    X3 = X[None] if single else X
    out = np.empty((X3.shape[0], R_hat.shape[1], C_hat.shape[1]))
    for t in range(X3.shape[0]):
        out[t] = (Rt @ np.ascontiguousarray(X3[t]) @ C_hat) / (p * q)
    return out[0] if single else out


def _sym_rel_err(M: np.ndarray) -> float:
    scale = max(np.max(np.abs(M)), 1e-300)
    return float(np.max(np.abs(M - M.T)) / scale)


@dataclass(frozen=True)
class MomentMatrices:
    M_R: np.ndarray
    M_C: np.ndarray
    alpha_weight: float

    def __post_init__(self):
        MR, MC = _frozen(self.M_R), _frozen(self.M_C)
        if self.alpha_weight < -1:
            raise ValidationError(f"alpha_weight must be >= -1, got {self.alpha_weight}")
        for name, M in (("M_R", MR), ("M_C", MC)):
            if M.ndim != 2 or M.shape[0] != M.shape[1]:
                raise ValidationError(f"{name} must be square, got {M.shape}")
            _check_finite(name, M)
            if np.any(M) and _sym_rel_err(M) > 1e-12:
                raise ValidationError(f"{name} is not symmetric")
            w = np.linalg.eigvalsh(M)
            if w.size and w[0] < -1e-10 * max(abs(w[-1]), 1e-300):
                raise ValidationError(f"{name} is not positive semidefinite (min eig {w[0]:.3g})")
        tr_r, tr_c = np.trace(MR), np.trace(MC)
        if abs(tr_r - tr_c) > 1e-10 * max(abs(tr_r), abs(tr_c), 1e-300):
            raise ValidationError(f"trace mismatch: {tr_r!r} vs {tr_c!r}")
        object.__setattr__(self, "M_R", MR)
        object.__setattr__(self, "M_C", MC)
        object.__setattr__(self, "alpha_weight", float(self.alpha_weight))


@dataclass(frozen=True)
class FactorEstimate:
    R_hat: np.ndarray
    C_hat: np.ndarray
    F_hat: np.ndarray
    eig_R: np.ndarray
    eig_C: np.ndarray
    alpha_weight: float

    def __post_init__(self):
        R, C, F = _frozen(self.R_hat), _frozen(self.C_hat), _frozen(self.F_hat)
        eR, eC = _frozen(self.eig_R), _frozen(self.eig_C)
        p, k = R.shape
        q, r = C.shape
        if F.ndim != 3 or F.shape[1:] != (k, r):
            raise ValidationError(f"F_hat must be T x {k} x {r}, got {F.shape}")
        if eR.shape != (k,) or eC.shape != (r,):
            raise ValidationError("eigenvalue vectors do not match (k, r)")
        for name, L, n in (("R_hat", R, p), ("C_hat", C, q)):
            G = L.T @ L / n
            if np.max(np.abs(G - np.eye(L.shape[1]))) > 1e-8:
                raise ValidationError(f"{name} violates (1/{n}) L'L = I")
            for j in range(L.shape[1]):
                if not _first_nonzero_positive(L[:, j], 1e-12):
                    raise ValidationError(f"{name} column {j} violates the sign convention")
        for name, e in (("eig_R", eR), ("eig_C", eC)):
            if np.any(np.diff(e) > 0) or np.any(e < 0):
                raise ValidationError(f"{name} must be descending and nonnegative")
        object.__setattr__(self, "R_hat", R)
        object.__setattr__(self, "C_hat", C)
        object.__setattr__(self, "F_hat", F)
        object.__setattr__(self, "eig_R", eR)
        object.__setattr__(self, "eig_C", eC)
        object.__setattr__(self, "alpha_weight", float(self.alpha_weight))

    @property
    def k(self) -> int:
        return self.R_hat.shape[1]

    @property
    def r(self) -> int:
        return self.C_hat.shape[1]

    def project(self, X: np.ndarray) -> np.ndarray:
        """Factors ``(1/pq) R_hat' X_t C_hat`` for new observations."""
        return project_factors(self.R_hat, self.C_hat, X)


@dataclass(frozen=True)
class LoadingEstimate:
    alpha_vec: np.ndarray
    beta_vec: np.ndarray
    objective_trace: tuple = ()
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        a, b = _frozen(self.alpha_vec), _frozen(self.beta_vec)
        if a.ndim != 1 or b.ndim != 1:
            raise ValidationError("loading vectors must be 1-d")
        _check_finite("alpha_vec", a)
        _check_finite("beta_vec", b)
        if abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise ValidationError(f"alpha_vec must have unit norm, got {np.linalg.norm(a)!r}")
        if not _first_nonzero_positive(a):
            raise ValidationError("first nonzero entry of alpha_vec must be positive")
        tr = tuple(float(v) for v in self.objective_trace)
        for prev, cur in zip(tr, tr[1:]):
            if cur > prev + 1e-9 * max(abs(prev), 1.0):
                raise ValidationError("objective_trace must be non-increasing")
        object.__setattr__(self, "alpha_vec", a)
        object.__setattr__(self, "beta_vec", b)
        object.__setattr__(self, "objective_trace", tr)

    @property
    def kron(self) -> np.ndarray:
        """``beta ⊗ alpha``, the identified coefficient vector on ``vec(F)``."""
        return np.outer(self.beta_vec, self.alpha_vec).ravel()


@dataclass(frozen=True)
class SimTruth:
    R: np.ndarray
    C: np.ndarray
    F_series: np.ndarray
    alpha_vec: np.ndarray
    beta_vec: np.ndarray
    noise_kind: NoiseKind
    factor_kind: FactorKind
    phi1: np.ndarray
    phi2: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    sigma2: float = 1.0
    horizon: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("R", "C", "F_series", "alpha_vec", "beta_vec", "phi1", "phi2", "psi1", "psi2"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        object.__setattr__(self, "noise_kind", NoiseKind(self.noise_kind))
        object.__setattr__(self, "factor_kind", FactorKind(self.factor_kind))
        for name in ("phi1", "phi2", "psi1", "psi2"):
            M = getattr(self, name)
            if M.size and (np.any(M != np.diag(np.diag(M))) or np.any(np.abs(np.diag(M)) >= 1)):
                raise ValidationError(f"{name} must be diagonal with entries in (-1, 1)")
        if abs(np.linalg.norm(self.alpha_vec) - 1.0) > 1e-10:
            raise ValidationError("alpha_vec must have unit norm")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        k, r = self.R.shape[1], self.C.shape[1]
        if self.F_series.shape[1:] != (k, r):
            raise ValidationError("F_series does not match loading dimensions")
