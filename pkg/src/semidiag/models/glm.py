"""Iteratively reweighted least squares for the log-link and logit-link GLMs."""

from __future__ import annotations

import logging
from typing import Callable

import numpy as np
from scipy import special as sc

from ..errors import DataError, FitError, SeparationError
from ..special import GammaParams, gamma_logpdf
from .base import FitReport, require_full_rank

log = logging.getLogger(__name__)

MAX_ITER = 100
REL_TOL = 1e-10


def irls(design: np.ndarray, beta0: np.ndarray,
         objective: Callable[[np.ndarray], float],
         working: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
         max_iter: int = MAX_ITER, tol: float = REL_TOL,
         ) -> tuple[np.ndarray, int, bool, list[float]]:
    """Fisher scoring on the linear predictor with step halving.

    ``objective(eta)`` is the (quasi-)log-likelihood to increase and
    ``working(eta)`` returns the IRLS weights and working response.
    Stops once the relative objective change drops below ``tol``.
    """
    beta = np.asarray(beta0, dtype=float).copy()
    eta = design @ beta
    value = objective(eta)
    trace = [value]
    for it in range(1, max_iter + 1):
        w, z = working(eta)
        xtw = design.T * w
        try:
            proposal = np.linalg.solve(xtw @ design, xtw @ z)
        except np.linalg.LinAlgError as exc:
            raise FitError(f"singular weighted normal equations at iteration {it}", trace) from exc
        step = proposal - beta
        for _ in range(40):
            new_eta = design @ (beta + step)
            new_value = objective(new_eta)
            if np.isfinite(new_value) and new_value >= value - 1e-12 * abs(value):
                break
            step *= 0.5
        beta = beta + step
        eta = new_eta
        change = abs(new_value - value) / max(abs(value), 1e-300)
        value = new_value
        trace.append(value)
        if change < tol:
            return _polish(design, beta, value, objective, working), it, True, trace
    return beta, max_iter, False, trace


def _polish(design, beta, value, objective, working, max_steps=20):
    # The objective test can stop with the score still near 1e-6.  A few
    # more scoring steps, kept only while they do not lower the objective
    # beyond rounding, take it to rounding level.
    for _ in range(max_steps):
        w, z = working(design @ beta)
        xtw = design.T * w
        try:
            proposal = np.linalg.solve(xtw @ design, xtw @ z)
        except np.linalg.LinAlgError:
            return beta
        new_value = objective(design @ proposal)
        if not (np.isfinite(new_value) and new_value >= value - 1e-12 * abs(value)):
            return beta
        done = np.max(np.abs(proposal - beta)) <= 1e-14 * max(1.0, np.max(np.abs(beta)))
        beta, value = proposal, max(value, new_value)
        if done:
            break
    return beta


def _fisher_se(design: np.ndarray, weights: np.ndarray, scale: float = 1.0) -> np.ndarray | None:
    try:
        cov = np.linalg.inv((design.T * weights) @ design) * scale
    except np.linalg.LinAlgError:
        return None
    return np.sqrt(np.diag(cov))


# ------------------------------------------------------------------ #
# Logistic regression for P(Y = 0)
# ------------------------------------------------------------------ #

SEPARATION_BOUND = 30.0


def _bernoulli_loglik(eta: np.ndarray, y: np.ndarray) -> float:
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(design: np.ndarray, is_zero: np.ndarray) -> tuple[np.ndarray, FitReport]:
    """Maximum-likelihood logistic regression of the zero indicator."""
    design = np.asarray(design, dtype=float)
    y = np.asarray(is_zero, dtype=float)
    if y.min() == y.max():
        raise DataError("zero indicator is constant; logistic part is not identified")
    require_full_rank(design)

    def working(eta):
        mu = sc.expit(eta)
        w = np.maximum(mu * (1.0 - mu), 1e-300)
        return w, eta + (y - mu) / w

    frac = y.mean()
    beta0 = np.zeros(design.shape[1])
    beta0[0] = np.log(frac / (1.0 - frac))
    try:
        beta, iters, converged, trace = irls(design, beta0, lambda e: _bernoulli_loglik(e, y), working)
    except FitError as exc:
        # Weights collapse to zero when every point is fitted perfectly.
        if exc.trace and exc.trace[-1] > -1e-6:
            raise SeparationError("the zero indicator is perfectly separable; "
                                  "logistic coefficients diverge", exc.trace) from exc
        raise

    eta = design @ beta
    mu = sc.expit(eta)
    score = design.T @ (y - mu)
    if np.max(np.abs(beta)) > SEPARATION_BOUND or not converged:
        if np.max(np.abs(beta)) > SEPARATION_BOUND or np.max(np.abs(score)) > 1e-6:
            raise SeparationError(
                f"logistic coefficients diverge (max |coef| = {np.max(np.abs(beta)):.3g}); "
                "the zero indicator appears separable", trace)
        raise FitError("logistic IRLS did not converge", trace)

    report = FitReport(
        log_likelihood=_bernoulli_loglik(eta, y), iterations=iters, converged=True,
        coefficient_standard_errors=_fisher_se(design, mu * (1.0 - mu)),
        extra={"score_norm": float(np.max(np.abs(score)))},
    )
    return beta, report


# ------------------------------------------------------------------ #
# Gamma GLM with log link for the positive part
# ------------------------------------------------------------------ #


def gamma_loglik(y: np.ndarray, mean: np.ndarray, dispersion: float) -> float:
    return float(np.sum(gamma_logpdf(y, GammaParams.from_mean(mean, dispersion))))


def fit_gamma_glm(design_pos: np.ndarray, y_pos: np.ndarray) -> tuple[np.ndarray, float, FitReport]:
    """Log-link gamma GLM; dispersion is the Pearson statistic over n - d.

    Returns coefficients for log E[Y | Y > 0], the dispersion (so the
    positive part is Gamma(shape=1/dispersion, scale=mean*dispersion))
    and a fit report.
    """
    X = np.asarray(design_pos, dtype=float)
    y = np.asarray(y_pos, dtype=float)
    if np.any(y <= 0):
        raise DataError("gamma GLM requires strictly positive responses")
    n, d = X.shape
    if n <= d:
        raise DataError(f"gamma GLM needs more than {d} positive observations, got {n}")
    require_full_rank(X)

    def objective(eta):
        return float(np.sum(-y * np.exp(-eta) - eta))

    def working(eta):
        return np.ones_like(eta), eta + y * np.exp(-eta) - 1.0

    beta0 = np.zeros(d)
    beta0[0] = np.log(y.mean())
    beta, iters, converged, trace = irls(X, beta0, objective, working)
    if not converged:
        raise FitError(f"gamma GLM did not converge in {MAX_ITER} iterations", trace)

    mean = np.exp(X @ beta)
    dispersion = float(np.sum(((y - mean) / mean) ** 2) / (n - d))
    score = X.T @ ((y - mean) / mean)
    report = FitReport(
        log_likelihood=gamma_loglik(y, mean, dispersion), iterations=iters, converged=True,
        coefficient_standard_errors=_fisher_se(X, np.ones(n), dispersion),
        extra={"score_norm": float(np.max(np.abs(score)))},
    )
    return beta, dispersion, report
