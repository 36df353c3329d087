"""Dense numerical kernels used by the estimators."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

from .core_types import _sign_fix_columns


class LinalgError(ArithmeticError):
    pass


class EigPair(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def sym_eig(A) -> EigPair:
    """Full symmetric eigendecomposition in descending order.

    The input is symmetrized as ``(A + A') / 2`` first.  Each eigenvector
    column is signed so that its first nonzero entry is positive.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise LinalgError("non-finite entry in input matrix")
    scale = np.max(np.abs(A)) if A.size else 0.0
    if scale > 0 and np.max(np.abs(A - A.T)) > 1e-10 * scale:
        raise LinalgError("matrix is not symmetric within 1e-10 relative tolerance")
    S = 0.5 * (A + A.T)
    try:
        w, v = scipy.linalg.eigh(S, driver="evd")
    except (np.linalg.LinAlgError, ValueError) as exc:
        w_, v_ = np.linalg.eigh(S)
        resid = np.linalg.norm(S @ v_ - v_ * w_)
        raise LinalgError(f"eigensolver failed to converge (residual {resid:.3g})") from exc
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = _sign_fix_columns(v[:, order])
    # exact ties: order the tied columns lexicographically (descending)
    i = 0
    while i < w.size:
        j = i + 1
        while j < w.size and w[j] == w[i]:
            j += 1
        if j - i > 1:
            block = v[:, i:j]
            keys = [tuple(-block[:, c]) for c in range(block.shape[1])]
            v[:, i:j] = block[:, sorted(range(j - i), key=keys.__getitem__)]
        i = j
    return EigPair(w, v)


def solve_spd(A, b) -> np.ndarray:
    """Solve ``A x = b`` for symmetric positive-definite ``A`` via Cholesky."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    norm_a = np.linalg.norm(A, 2) if A.size else 0.0
    try:
        c, low = scipy.linalg.cho_factor(0.5 * (A + A.T), lower=True)
    except np.linalg.LinAlgError:
        raise LinalgError(f"matrix is not positive definite (condition ~ {np.linalg.cond(A):.3g})") from None
    pivots = np.abs(np.diag(c)) ** 2
    if norm_a == 0 or pivots.min() <= 1e-12 * norm_a:
        cond = np.linalg.cond(A) if norm_a > 0 else np.inf
        raise LinalgError(f"matrix is singular or ill-conditioned (condition ~ {cond:.3g})")
    return scipy.linalg.cho_solve((c, low), b)


def kron(a, b) -> np.ndarray:
    """Kronecker product of two vectors; entry ``i*len(b) + j`` is ``a[i]*b[j]``."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("kron of an empty vector")
    return (a[:, None] * b[None, :]).ravel()


def spectral_norm(A) -> float:
    A = np.atleast_2d(np.asarray(A, dtype=float))
    return float(np.linalg.norm(A, 2))


def frob_norm(A) -> float:
    A = np.asarray(A, dtype=float)
    m = np.max(np.abs(A)) if A.size else 0.0
    if m == 0 or not np.isfinite(m):
        return float(m)
    # rescale so tiny or huge entries do not under/overflow when squared
    return float(m * np.linalg.norm(A / m))
