"""Residual diagnostics for regression models with semicontinuous outcomes."""

__version__ = "0.1.0"

from .errors import (DataError, DomainError, FitError, RankDeficientError, SemidiagError,
                     SeparationError, SeriesError)
from .models import Dataset, conditional_cdf, fit_model, predict_p0
from .residuals import ResidualSet, out_of_sample_errors, proposed_residuals

__all__ = [
    "DataError", "Dataset", "DomainError", "FitError", "RankDeficientError", "ResidualSet",
    "SemidiagError", "SeparationError", "SeriesError", "conditional_cdf", "fit_model",
    "out_of_sample_errors", "predict_p0", "proposed_residuals",
]
