"""Tobit regression: a latent normal outcome censored below a detection limit."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError, FitError
from ..special import normal_cdf, normal_logcdf
from ._optim import maximize, standard_errors
from .base import Dataset, FitReport, require_full_rank

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class TobitFit:
    coef: np.ndarray
    sigma: float
    limit: float
    column_names: tuple[str, ...]
    report: FitReport | None = field(default=None, compare=False)

    family = "tobit"

    def p0(self, design):
        return normal_cdf((self.limit - np.asarray(design, dtype=float) @ self.coef) / self.sigma)

    def cdf(self, y, design):
        y = np.asarray(y, dtype=float)
        p0 = self.p0(design)
        # No mass between 0 and the limit: observed values below it are zeros.
        latent = normal_cdf((y - np.asarray(design, dtype=float) @ self.coef) / self.sigma)
        return np.where(y <= self.limit, p0, latent)


def tobit_loglik_grad(theta, X, y, censored, limit):
    """Log-likelihood and gradient in (beta, log sigma)."""
    beta, log_sigma = theta[:-1], theta[-1]
    sigma = np.exp(log_sigma)
    xb = X @ beta
    c = (limit - xb[censored]) / sigma
    e = (y[~censored] - xb[~censored]) / sigma
    log_cdf = normal_logcdf(c)
    ll = np.sum(log_cdf) + np.sum(-0.5 * e * e - _LOG_SQRT_2PI - log_sigma)
    mills = np.exp(-0.5 * c * c - _LOG_SQRT_2PI - log_cdf)
    grad_beta = X[censored].T @ (-mills / sigma) + X[~censored].T @ (e / sigma)
    grad_ls = np.sum(-mills * c) + np.sum(e * e - 1.0)
    return float(ll), np.append(grad_beta, grad_ls)


def fit_tobit(data: Dataset, limit: float = 0.0) -> TobitFit:
    """Maximum likelihood over (beta, log sigma); responses <= limit count as censored."""
    if limit < 0:
        raise DataError("Tobit limit must be nonnegative for a nonnegative response")
    X, y = data.design, data.response
    censored = y <= limit
    if censored.all() or not censored.any():
        raise DataError("Tobit fit needs both censored and uncensored observations")
    require_full_rank(X)
    beta0, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta0
    theta0 = np.append(beta0, np.log(max(np.std(resid), 1e-3)))
    res = maximize(lambda th: tobit_loglik_grad(th, X, y, censored, limit), theta0,
                   scale=len(y))
    if not res.converged:
        raise FitError(
            f"Tobit fit stopped with gradient norm {np.max(np.abs(res.gradient)):.3g}",
            [res.value])
    se = standard_errors(res.hessian)
    report = FitReport(
        log_likelihood=res.value, iterations=res.iterations, converged=True,
        coefficient_standard_errors=None if se is None else se[:-1],
        extra={"gradient_norm": float(np.max(np.abs(res.gradient)))},
    )
    return TobitFit(res.x[:-1], float(np.exp(res.x[-1])), float(limit), data.column_names, report)
