"""Iterative least squares for the bilinear forecasting equation.

Given matrix regressors ``Z_t`` (the estimated factors, or raw data for the
benchmark) and targets ``y_{t+h}``, minimise ``sum_t (y_{t+h} - a' Z_t b)^2``
by alternating exact least-squares solves for ``a`` and ``b``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .core_types import LoadingEstimate, ScalarSeries, ValidationError
from .linalg import LinalgError, solve_spd

log = logging.getLogger(__name__)


class SingularUpdateError(LinalgError):
    pass


@dataclass(frozen=True)
class LseConfig:
    max_iterations: int = 200
    rel_tol: float = 1e-10
    init_rule: str = "first_unit_vector"
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValidationError("max_iterations must be >= 1")
        if not self.rel_tol > 0:
            raise ValidationError("rel_tol must be > 0")
        if self.init_rule not in ("first_unit_vector", "seeded_random_unit"):
            raise ValidationError(f"unknown init_rule {self.init_rule!r}")


def _objective(Z, y, a, b) -> float:
    resid = y - np.einsum("i,tij,j->t", a, Z, b)
    return float(resid @ resid)


def fit_bilinear(Z, y, cfg: LseConfig | None = None) -> LoadingEstimate:
    """Fit ``y[t] ~ a' Z[t] b`` on already aligned arrays.

    ``Z`` is ``n x m x l`` and ``y`` has length ``n``.  On exit ``a`` is
    rescaled to unit norm with its first nonzero entry positive; the scale
    and sign are moved into ``b``.
    """
    cfg = cfg or LseConfig()
    Z = np.asarray(Z, dtype=float)
    y = np.asarray(y, dtype=float)
    if Z.ndim != 3 or Z.shape[0] != y.size:
        raise ValidationError(f"shape mismatch: regressors {Z.shape}, targets {y.shape}")
    n, m, l = Z.shape
    if n < m + l:
        raise ValidationError(f"need at least {m + l} observations, got {n}")
    if not (np.all(np.isfinite(Z)) and np.all(np.isfinite(y))):
        raise ValidationError("non-finite regressors or targets")

    if cfg.init_rule == "first_unit_vector":
        b = np.zeros(l)
        b[0] = 1.0
    else:
        b = np.random.default_rng(cfg.seed).standard_normal(l)
        b /= np.linalg.norm(b)

    trace = []
    converged = False
    a = np.zeros(m)
    sweep = 0
    for sweep in range(1, cfg.max_iterations + 1):
        G = Z @ b  # n x m, rows Z_t b
        try:
            a = solve_spd(G.T @ G, G.T @ y)
        except LinalgError as exc:
            raise SingularUpdateError(f"singular alpha update in sweep {sweep}: {exc}") from None
        W = np.einsum("tij,i->tj", Z, a)  # rows Z_t' a
        try:
            b = solve_spd(W.T @ W, W.T @ y)
        except LinalgError as exc:
            raise SingularUpdateError(f"singular beta update in sweep {sweep}: {exc}") from None
        obj = _objective(Z, y, a, b)
        trace.append(obj)
        if len(trace) >= 2:
            prev = trace[-2]
            if prev - obj <= cfg.rel_tol * max(prev, np.finfo(float).tiny):
                converged = True
                break
        elif obj == 0.0:
            converged = True
            break
    if not converged:
        log.warning("bilinear LSE did not converge in %d sweeps", cfg.max_iterations)

    a, b = normalize_pair(a, b)
    return LoadingEstimate(a, b, tuple(trace), converged, sweep)


def normalize_pair(a, b):
    """Rescale so ``||a|| = 1`` with a positive first nonzero entry."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s = np.linalg.norm(a)
    if s == 0:
        raise SingularUpdateError("alpha estimate is zero")
    nz = np.flatnonzero(a != 0)
    if a[nz[0]] < 0:
        s = -s
    return a / s, b * s


def fit(factors, target, horizon: int = 1, cfg: LseConfig | None = None) -> LoadingEstimate:
    """Fit the loading vectors from factors ``F_hat`` and a target series.

    ``factors`` has one ``k x r`` matrix per time point and ``target`` the
    matching ``T`` values; pairs ``(F_hat[t], y[t+h])`` for
    ``t < T - h`` enter the least-squares problem.
    """
    F = np.asarray(factors, dtype=float)
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, dtype=float)
    if F.ndim != 3 or F.shape[0] != y.size:
        raise ValidationError(f"factors {F.shape} and target {y.shape} are not aligned")
    if horizon < 1 or y.size - horizon < 1:
        raise ValidationError(f"no usable pairs: T={y.size}, h={horizon}")
    return fit_bilinear(F[: y.size - horizon], y[horizon:], cfg)


def forecast(factors_t, loadings: LoadingEstimate):
    """``a' F_t b`` for one ``k x r`` factor matrix or a stack of them."""
    F = np.asarray(factors_t, dtype=float)
    a, b = loadings.alpha_vec, loadings.beta_vec
    if F.shape[-2:] != (a.size, b.size):
        raise ValidationError(f"factor shape {F.shape[-2:]} does not match loadings ({a.size}, {b.size})")
    if F.ndim == 2:
        return float(((F[None] @ b) @ a)[0])
    return (F @ b) @ a
