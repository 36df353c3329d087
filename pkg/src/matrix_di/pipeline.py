"""End-to-end forecaster: optional screening, alpha-PCA, bilinear LSE."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import alpha_pca, bilinear_lse
from .core_types import FactorEstimate, LoadingEstimate, MatrixSeries, ScalarSeries, ValidationError
from .screening import ScreenResult, screen


@dataclass(frozen=True)
class PipelineConfig:
    alpha_weight: float = 0.0
    k: int | None = None
    r: int | None = None
    estimate_dims: bool = False
    row_threshold: float | None = None
    col_threshold: float | None = None
    lse: bilinear_lse.LseConfig = field(default_factory=bilinear_lse.LseConfig)

    def __post_init__(self):
        fixed = self.k is not None or self.r is not None
        if fixed and self.estimate_dims:
            raise ValidationError("fixed (k, r) and estimate_dims are mutually exclusive")
        if not fixed and not self.estimate_dims:
            raise ValidationError("give (k, r) or set estimate_dims")
        if fixed and (self.k is None or self.r is None):
            raise ValidationError("k and r must be given together")
        if self.alpha_weight < -1:
            raise ValidationError("alpha_weight must be >= -1")

    @property
    def screening(self) -> bool:
        return self.row_threshold is not None or self.col_threshold is not None

    @property
    def min_train(self) -> int:
        return 5 * ((self.k or 1) + (self.r or 1))

    def fit(self, X, y, horizon: int = 1) -> "PipelineFit":
        return fit_pipeline(X, y, horizon, self)


@dataclass(frozen=True)
class PipelineFit:
    config: PipelineConfig
    factors: FactorEstimate
    loadings: LoadingEstimate
    rows: tuple
    cols: tuple
    horizon: int
    screen: ScreenResult | None = None
    dims_fallback: bool = False

    @property
    def k(self) -> int:
        return self.factors.k

    @property
    def r(self) -> int:
        return self.factors.r

    def project(self, X_rows) -> np.ndarray:
        X = np.asarray(X_rows, dtype=float)
        X = X[..., list(self.rows), :][..., list(self.cols)]
        return self.factors.project(X)

    def predict(self, X_rows, y_rows=None) -> np.ndarray:
        """Forecasts of ``y_{t+h}`` from the given ``X_t`` matrices."""
        return np.atleast_1d(bilinear_lse.forecast(self.project(X_rows), self.loadings))

    def fitted_values(self) -> np.ndarray:
        return np.atleast_1d(bilinear_lse.forecast(self.factors.F_hat, self.loadings))


def fit_pipeline(series, target, horizon: int, cfg: PipelineConfig) -> PipelineFit:
    X = series.values if isinstance(series, MatrixSeries) else np.asarray(series, dtype=float)
    y = target.values if isinstance(target, ScalarSeries) else np.asarray(target, dtype=float)
    _, p, q = X.shape
    rows, cols = tuple(range(p)), tuple(range(q))
    res = None
    if cfg.screening:
        rt = cfg.row_threshold if cfg.row_threshold is not None else 0.0
        ct = cfg.col_threshold if cfg.col_threshold is not None else rt
        res = screen(X, y, rt, ct)
        rows, cols = res.kept_rows, res.kept_cols
        X = X[:, list(rows)][:, :, list(cols)]
    fallback = False
    if cfg.estimate_dims:
        dims = alpha_pca.estimate_dims(X, cfg.alpha_weight)
        k, r = dims.k_hat, dims.r_hat
        fallback = dims.row.used_fallback or dims.col.used_fallback
    else:
        k, r = cfg.k, cfg.r
        if k > X.shape[1] or r > X.shape[2]:
            raise ValidationError(
                f"(k, r) = ({k}, {r}) exceeds the screened panel {X.shape[1]} x {X.shape[2]}"
            )
    est = alpha_pca.fit(X, k, r, cfg.alpha_weight)
    load = bilinear_lse.fit(est.F_hat, y, horizon, cfg.lse)
    return PipelineFit(cfg, est, load, tuple(rows), tuple(cols), horizon, res, fallback)
