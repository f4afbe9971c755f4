"""Two-part (hurdle) models: logistic zero part with a gamma or GB2 positive part."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from ..errors import DataError, FitError
from ..special import GammaParams, GB2Params, gamma_cdf, gb2_cdf
from ._optim import maximize, standard_errors
from .base import Dataset, FitReport, require_full_rank
from .glm import fit_gamma_glm, fit_logistic

# Box on (log a, log p, log q).  The upper q bound lets gamma-like data
# approach its q -> infinity limit without the optimiser running away.
GB2_LOG_SHAPE_BOUNDS = ((-4.0, 5.0), (-5.0, 8.0), (-5.0, 8.0))
GB2_JITTERS = ((0.5, 0.5, 0.5), (-0.5, -0.5, -0.5), (0.5, -0.5, 0.5),
               (-0.5, 0.5, -0.5), (0.5, 0.5, -0.5))


@dataclass(frozen=True)
class TwoPartFit:
    zero_coef: np.ndarray
    positive_family: str
    positive_coef: np.ndarray
    shape_params: dict
    column_names: tuple[str, ...]
    reports: dict = field(default_factory=dict, compare=False)

    @property
    def family(self) -> str:
        return f"twopart-{self.positive_family}"

    def p0(self, design):
        return sc.expit(np.asarray(design, dtype=float) @ self.zero_coef)

    def positive_params(self, design):
        scale = np.exp(np.asarray(design, dtype=float) @ self.positive_coef)
        if self.positive_family == "gamma":
            return GammaParams.from_mean(scale, self.shape_params["dispersion"])
        s = self.shape_params
        return GB2Params(s["a"], scale, s["p"], s["q"])

    def positive_cdf(self, y, design):
        params = self.positive_params(design)
        if self.positive_family == "gamma":
            return gamma_cdf(y, params)
        return gb2_cdf(y, params)

    def cdf(self, y, design):
        p0 = self.p0(design)
        return p0 + (1.0 - p0) * self.positive_cdf(np.asarray(y, dtype=float), design)


# ------------------------------------------------------------------ #
# GB2 regression with log-scale b = exp(x'beta)
# ------------------------------------------------------------------ #


def gb2_loglik_grad(theta: np.ndarray, X: np.ndarray, log_y: np.ndarray) -> tuple[float, np.ndarray]:
    """Log-likelihood and gradient in (beta, log a, log p, log q)."""
    d = X.shape[1]
    beta = theta[:d]
    a, p, q = np.exp(theta[d:])
    t = a * (log_y - X @ beta)
    soft = np.logaddexp(0.0, t)
    s = sc.expit(t)
    ll = np.sum(np.log(a) + p * t - log_y - sc.betaln(p, q) - (p + q) * soft)
    d_eta = a * ((p + q) * s - p)
    pq = sc.digamma(p + q)
    grad = np.concatenate([
        X.T @ d_eta,
        [np.sum(1.0 + t * (p - (p + q) * s)),
         p * np.sum(t - sc.digamma(p) + pq - soft),
         q * np.sum(-sc.digamma(q) + pq - soft)],
    ])
    return float(ll), grad


def fit_gb2(design_pos: np.ndarray, y_pos: np.ndarray, beta_init: np.ndarray | None = None):
    """Maximum-likelihood GB2 regression on the positive responses.

    Returns ``(coef, a, p, q, report)`` where ``coef`` drives log b.
    Starts from the gamma GLM mean coefficients with a=1, p=1, q=2 and
    retries from jittered shape parameters if the gradient test fails.
    """
    X = np.asarray(design_pos, dtype=float)
    y = np.asarray(y_pos, dtype=float)
    if np.any(y <= 0):
        raise DataError("GB2 fit requires strictly positive responses")
    n, d = X.shape
    if n < d + 3:
        raise DataError(f"GB2 fit needs at least {d + 3} positive observations, got {n}")
    require_full_rank(X)
    if beta_init is None:
        beta_init = fit_gamma_glm(X, y)[0]
    log_y = np.log(y)
    base = np.concatenate([beta_init, np.log([1.0, 1.0, 2.0])])
    fun = lambda th: gb2_loglik_grad(th, X, log_y)

    bounds = [(-np.inf, np.inf)] * d + list(GB2_LOG_SHAPE_BOUNDS)
    starts = [base] + [base + np.concatenate([np.zeros(d), j]) for j in GB2_JITTERS]
    best = None
    attempts = []
    for start in starts:
        try:
            res = maximize(fun, start, bounds=bounds, scale=n)
        except (FloatingPointError, np.linalg.LinAlgError):
            continue
        attempts.append((res.value, res.converged))
        if best is None or (res.converged, res.value) > (best.converged, best.value):
            best = res
        if res.converged:
            break
    if best is None or not best.converged:
        raise FitError("GB2 optimisation failed from every start", attempts)

    a, p, q = np.exp(best.x[d:])
    report = FitReport(
        log_likelihood=best.value, iterations=best.iterations, converged=True,
        coefficient_standard_errors=standard_errors(best.hessian),
        extra={"gradient_norm": float(np.max(np.abs(best.gradient[~best.at_bound]), initial=0.0)),
               "starts": len(attempts),
               "shape_at_bound": [n for n, b in zip("apq", best.at_bound[d:]) if b]},
    )
    return best.x[:d], float(a), float(p), float(q), report


def fit_two_part(data: Dataset, family: str = "gamma") -> TwoPartFit:
    """Fit the logistic zero part and the chosen positive family separately."""
    zero = data.is_zero
    if zero.all() or not zero.any():
        raise DataError("two-part fitting needs at least one zero and one positive response")
    zero_coef, zero_report = fit_logistic(data.design, zero)
    Xp, yp = data.design[~zero], data.response[~zero]
    gamma_coef, dispersion, gamma_report = fit_gamma_glm(Xp, yp)
    if family == "gamma":
        pos_coef, shape, pos_report = gamma_coef, {"dispersion": dispersion}, gamma_report
    elif family == "gb2":
        pos_coef, a, p, q, pos_report = fit_gb2(Xp, yp, beta_init=gamma_coef)
        shape = {"a": a, "p": p, "q": q}
    else:
        raise ValueError(f"unknown positive family {family!r}")
    return TwoPartFit(zero_coef, family, pos_coef, shape, data.column_names,
                      {"zero": zero_report, "positive": pos_report})
