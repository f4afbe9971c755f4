"""Regression models for semicontinuous outcomes."""

from .base import Dataset, FitReport, FittedModel, conditional_cdf, predict_p0
from .glm import fit_gamma_glm, fit_logistic
from .tobit import TobitFit, fit_tobit
from .tweedie import TweedieFit, fit_tweedie, tweedie_loglik
from .twopart import TwoPartFit, fit_gb2, fit_two_part

MODEL_NAMES = ("tweedie", "twopart-gamma", "twopart-gb2", "tobit")


def fit_model(name: str, data: Dataset, limit: float = 0.0) -> FittedModel:
    """Fit a model family by its command-line name."""
    if name == "tweedie":
        return fit_tweedie(data)
    if name == "twopart-gamma":
        return fit_two_part(data, "gamma")
    if name == "twopart-gb2":
        return fit_two_part(data, "gb2")
    if name == "tobit":
        return fit_tobit(data, limit)
    raise ValueError(f"unknown model {name!r}; expected one of {', '.join(MODEL_NAMES)}")


__all__ = [
    "Dataset", "FitReport", "FittedModel", "MODEL_NAMES", "TobitFit", "TweedieFit", "TwoPartFit",
    "conditional_cdf", "fit_gamma_glm", "fit_gb2", "fit_logistic", "fit_model", "fit_tobit",
    "fit_tweedie", "fit_two_part", "predict_p0", "tweedie_loglik",
]
