"""Matrix-valued diffusion-index forecasting.

alpha-PCA factor extraction from matrix time series, a bilinear forecasting
equation fitted by alternating least squares, supervised row/column
screening, benchmarks, simulation studies and evaluation tools.
"""

from .core_types import (
    FactorEstimate,
    FactorKind,
    LoadingEstimate,
    MatrixSeries,
    NoiseKind,
    ScalarSeries,
    SimTruth,
    ValidationError,
    validate,
)
from .pipeline import PipelineConfig, PipelineFit, fit_pipeline

__version__ = "0.1.0"

__all__ = [
    "FactorEstimate", "FactorKind", "LoadingEstimate", "MatrixSeries", "NoiseKind",
    "ScalarSeries", "SimTruth", "ValidationError", "validate",
    "PipelineConfig", "PipelineFit", "fit_pipeline",
]
