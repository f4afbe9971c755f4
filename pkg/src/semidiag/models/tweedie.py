"""Tweedie GLM with log link and a profiled power parameter."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from ..errors import DataError, FitError, SemidiagError
from ..special import TweedieParams, tweedie_cdf, tweedie_logpdf
from .base import Dataset, FitReport, require_full_rank
from .glm import irls

log = logging.getLogger(__name__)

POWER_GRID = tuple(round(1.10 + 0.05 * i, 2) for i in range(17))
POWER_TOL = 0.005
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class TweedieFit:
    coef: np.ndarray
    phi: float
    power: float
    column_names: tuple[str, ...]
    report: FitReport | None = field(default=None, compare=False)

    family = "tweedie"

    def mean(self, design):
        return np.exp(np.asarray(design, dtype=float) @ self.coef)

    def variance(self, design):
        return self.phi * self.mean(design) ** self.power

    def params(self, design) -> TweedieParams:
        return TweedieParams(self.mean(design), self.phi, self.power)

    def p0(self, design):
        return np.exp(-self.params(design).derived().lam)

    def cdf(self, y, design):
        return tweedie_cdf(y, self.params(design))


def tweedie_loglik(y: np.ndarray, mu: np.ndarray, phi: float, power: float) -> float:
    """Exact log-likelihood: log P(Y=0) = -lambda for zeros, series density otherwise."""
    params = TweedieParams(mu, phi, power)
    lam = params.derived().lam
    pos = y > 0
    ll = -np.sum(lam[~pos])
    if pos.any():
        ll += np.sum(tweedie_logpdf(y[pos], TweedieParams(mu[pos], phi, power)))
    return float(ll)


def tweedie_irls(X: np.ndarray, y: np.ndarray, power: float, beta0: np.ndarray | None = None):
    """Quasi-likelihood IRLS for log E[Y] with variance function mu^power."""

    def objective(eta):
        mu = np.exp(eta)
        return float(np.sum(y * mu ** (1.0 - power) / (1.0 - power) - mu ** (2.0 - power) / (2.0 - power)))

    def working(eta):
        mu = np.exp(eta)
        return mu ** (2.0 - power), eta + (y - mu) / mu

    if beta0 is None:
        beta0 = np.zeros(X.shape[1])
        beta0[0] = np.log(y.mean())
    return irls(X, beta0, objective, working)


def pearson_phi(X: np.ndarray, y: np.ndarray, mu: np.ndarray, power: float) -> float:
    n, d = X.shape
    return float(np.sum((y - mu) ** 2 / mu ** power) / (n - d))


def _profile_point(X, y, power, beta0=None):
    beta, iters, converged, _ = tweedie_irls(X, y, power, beta0)
    if not converged:
        return None
    mu = np.exp(X @ beta)
    phi = pearson_phi(X, y, mu, power)
    try:
        ll = tweedie_loglik(y, mu, phi, power)
    except SemidiagError:
        return None
    return {"power": power, "phi": phi, "log_likelihood": ll, "coef": beta, "iterations": iters}


def fit_tweedie(data: Dataset) -> TweedieFit:
    """Profile the power over a grid, refine by golden section, then refine phi.

    At every power the coefficients come from quasi-likelihood IRLS and phi
    from the Pearson estimator; the power maximising the exact series
    likelihood is kept, and phi is re-estimated by exact maximum likelihood.
    """
    X, y = data.design, data.response
    if not (np.any(y == 0) and np.any(y > 0)):
        raise DataError("Tweedie fit needs both zero and positive responses")
    require_full_rank(X)

    profile = []
    for power in POWER_GRID:
        point = _profile_point(X, y, power)
        if point is None:
            log.warning("Tweedie IRLS failed at power %.2f; dropping grid point", power)
            continue
        profile.append(point)
    if not profile:
        raise FitError("Tweedie IRLS failed at every grid power")

    best = max(profile, key=lambda r: r["log_likelihood"])
    lo = max(best["power"] - 0.05, 1.01)
    hi = min(best["power"] + 0.05, 1.99)
    cache = {}

    def neg_profile(power):
        if power not in cache:
            cache[power] = _profile_point(X, y, power, best["coef"])
        point = cache[power]
        return np.inf if point is None else -point["log_likelihood"]

    # Golden section down to a bracket of width 2 * POWER_TOL.
    c, d = hi - _GOLDEN * (hi - lo), lo + _GOLDEN * (hi - lo)
    fc, fd = neg_profile(c), neg_profile(d)
    while hi - lo > 2 * POWER_TOL:
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = neg_profile(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = neg_profile(d)
    candidates = profile + [p for p in cache.values() if p is not None]
    chosen = max(candidates, key=lambda r: r["log_likelihood"])
    power = chosen["power"]

    beta, iters, converged, trace = tweedie_irls(X, y, power, chosen["coef"])
    if not converged:
        raise FitError(f"Tweedie IRLS did not converge at chosen power {power:.4f}", trace)
    mu = np.exp(X @ beta)
    phi_pearson = pearson_phi(X, y, mu, power)
    res = optimize.minimize_scalar(
        lambda lp: -tweedie_loglik(y, mu, math.exp(lp), power),
        bounds=(math.log(phi_pearson) - 2.0, math.log(phi_pearson) + 2.0),
        method="bounded", options={"xatol": 1e-8})
    phi = math.exp(res.x)
    ll = -float(res.fun)
    if ll < chosen["log_likelihood"]:
        phi, ll = phi_pearson, tweedie_loglik(y, mu, phi_pearson, power)

    report = FitReport(
        log_likelihood=ll, iterations=iters, converged=True,
        extra={
            "phi_pearson": phi_pearson,
            "profile": sorted(((p["power"], p["phi"], p["log_likelihood"]) for p in candidates)),
        },
    )
    return TweedieFit(beta, phi, power, data.column_names, report)
