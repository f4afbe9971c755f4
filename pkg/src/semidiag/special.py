"""Special functions and distribution primitives.

Every function here is vectorised: scalars and numpy arrays broadcast in
the usual way, and scalar input yields a numpy scalar.  Parameter bundles
are frozen dataclasses whose fields may themselves be arrays, so a whole
regression's worth of per-observation parameters evaluates in one call.

The regularised incomplete gamma/beta functions, log-gamma and the normal
distribution are taken from :mod:`scipy.special`.  The compound
Poisson-gamma (Tweedie) series is evaluated here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special as sc

from .errors import DomainError, SeriesError

SERIES_RTOL = 1e-12
SERIES_MAX_TERMS = 100_000
_LOG_RTOL = math.log(SERIES_RTOL)


def _check(cond, message: str) -> None:
    if not np.all(cond):
        raise DomainError(message)


# ------------------------------------------------------------------ #
# Parameter bundles
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class GammaParams:
    shape: float | np.ndarray
    scale: float | np.ndarray

    def __post_init__(self):
        _check(np.asarray(self.shape) > 0, "gamma shape must be positive")
        _check(np.asarray(self.scale) > 0, "gamma scale must be positive")

    @classmethod
    def from_mean(cls, mean, dispersion) -> "GammaParams":
        """Mean/dispersion form used by gamma GLMs: shape 1/phi, scale mean*phi."""
        dispersion = np.asarray(dispersion, dtype=float)
        return cls(1.0 / dispersion, np.asarray(mean, dtype=float) * dispersion)


@dataclass(frozen=True)
class GB2Params:
    a: float | np.ndarray
    b: float | np.ndarray
    p: float | np.ndarray
    q: float | np.ndarray

    def __post_init__(self):
        for name in ("a", "b", "p", "q"):
            _check(np.asarray(getattr(self, name)) > 0, f"GB2 {name} must be positive")


@dataclass(frozen=True)
class TweedieParams:
    mu: float | np.ndarray
    phi: float | np.ndarray
    power: float | np.ndarray

    def __post_init__(self):
        _check(np.asarray(self.mu) > 0, "Tweedie mean must be positive")
        _check(np.asarray(self.phi) > 0, "Tweedie dispersion must be positive")
        power = np.asarray(self.power)
        _check((power > 1) & (power < 2), "Tweedie power must lie in (1, 2)")

    def derived(self) -> "CpgDerived":
        return CpgDerived.from_tweedie(self)


@dataclass(frozen=True)
class CpgDerived:
    """Compound Poisson-gamma form: N ~ Poisson(lam), jumps ~ Gamma(jump_shape, jump_scale)."""

    lam: float | np.ndarray
    jump_shape: float | np.ndarray
    jump_scale: float | np.ndarray

    @classmethod
    def from_tweedie(cls, params: TweedieParams) -> "CpgDerived":
        mu = np.asarray(params.mu, dtype=float)
        phi = np.asarray(params.phi, dtype=float)
        power = np.asarray(params.power, dtype=float)
        lam = mu ** (2.0 - power) / (phi * (2.0 - power))
        jump_shape = (2.0 - power) / (power - 1.0)
        jump_scale = phi * (power - 1.0) * mu ** (power - 1.0)
        return cls(lam, jump_shape, jump_scale)


# ------------------------------------------------------------------ #
# Scalar special functions
# ------------------------------------------------------------------ #


def log_gamma(x):
    x = np.asarray(x, dtype=float)
    _check(x > 0, "log_gamma requires x > 0")
    return sc.gammaln(x)


def normal_cdf(z):
    return sc.ndtr(np.asarray(z, dtype=float))


def normal_logcdf(z):
    return sc.log_ndtr(np.asarray(z, dtype=float))


def normal_quantile(u):
    u = np.asarray(u, dtype=float)
    _check((u > 0) & (u < 1), "normal_quantile requires 0 < u < 1")
    return sc.ndtri(u)


# ------------------------------------------------------------------ #
# Gamma and GB2
# ------------------------------------------------------------------ #


def gamma_cdf(y, params: GammaParams):
    y = np.asarray(y, dtype=float)
    _check(y >= 0, "gamma_cdf requires y >= 0")
    return sc.gammainc(params.shape, y / params.scale)


def gamma_logpdf(y, params: GammaParams):
    y = np.asarray(y, dtype=float)
    _check(y > 0, "gamma_logpdf requires y > 0")
    shape, scale = params.shape, params.scale
    return (shape - 1.0) * np.log(y) - y / scale - sc.gammaln(shape) - shape * np.log(scale)


def gamma_quantile(u, params: GammaParams):
    u = np.asarray(u, dtype=float)
    _check((u >= 0) & (u < 1), "gamma_quantile requires 0 <= u < 1")
    return sc.gammaincinv(params.shape, u) * params.scale


def _gb2_log_ratio(y, params: GB2Params):
    with np.errstate(divide="ignore"):
        return params.a * (np.log(y) - np.log(params.b))


def gb2_cdf(y, params: GB2Params):
    """Regularised incomplete beta at z = (y/b)^a / (1 + (y/b)^a).

    Evaluated through whichever tail keeps z away from 1 so the upper
    tail does not lose precision to cancellation.
    """
    y = np.asarray(y, dtype=float)
    _check(y >= 0, "gb2_cdf requires y >= 0")
    t = _gb2_log_ratio(y, params)
    lower = sc.betainc(params.p, params.q, sc.expit(t))
    upper = 1.0 - sc.betainc(params.q, params.p, sc.expit(-t))
    return np.where(t <= 0, lower, upper)


def gb2_logpdf(y, params: GB2Params):
    y = np.asarray(y, dtype=float)
    _check(y > 0, "gb2_logpdf requires y > 0")
    a, b, p, q = params.a, params.b, params.p, params.q
    t = _gb2_log_ratio(y, params)
    return (np.log(a) + (a * p - 1.0) * np.log(y) - a * p * np.log(b)
            - sc.betaln(p, q) - (p + q) * np.logaddexp(0.0, t))


def gb2_sample(rng: np.random.Generator, params: GB2Params, size=None):
    """Draw GB2 variates as b * (B / (1 - B))^(1/a) with B ~ Beta(p, q)."""
    if size is None:
        size = np.broadcast(params.a, params.b, params.p, params.q).shape
    beta = rng.beta(params.p, params.q, size=size)
    return params.b * (beta / (1.0 - beta)) ** (1.0 / params.a)


# ------------------------------------------------------------------ #
# Tweedie compound Poisson-gamma
# ------------------------------------------------------------------ #


def _window_logsum(log_term, rows, lo, hi):
    """Log-sum of terms over [lo, hi] per row plus the two terms at each edge."""
    width = hi - lo + 1
    k = lo[:, None] + np.arange(width.max())[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = log_term(k.astype(float), rows)
    terms = np.where((k <= hi[:, None]) & ~np.isnan(terms), terms, -np.inf)
    idx = np.arange(rows.size)
    last = width - 1
    edges = (terms[:, 0], terms[idx, np.minimum(1, last)],
             terms[idx, last], terms[idx, np.maximum(last - 1, 0)])
    return sc.logsumexp(terms, axis=1), edges


def _adaptive_logsum(log_term: Callable[[np.ndarray, np.ndarray], np.ndarray],
                     center: np.ndarray, spread: np.ndarray, context: dict) -> np.ndarray:
    """Row-wise log of sum_{k>=1} exp(log_term(k)) over an adaptive window.

    Each row starts from ``center`` +/- 8 ``spread`` and doubles the
    failing side until the edge term is below SERIES_RTOL of the running
    sum and falling away from the window.  Terms are assumed unimodal in k.
    Rows are bucketed by window width so one wide row does not pad the rest.
    """
    center = np.maximum(np.rint(center), 1).astype(np.int64)
    half = 6 + np.ceil(8.0 * spread).astype(np.int64)
    lo = np.maximum(center - half, 1)
    hi = center + half
    out = np.empty(center.shape, dtype=float)
    pending = np.arange(center.size)

    while pending.size:
        width = hi[pending] - lo[pending] + 1
        if width.max() > SERIES_MAX_TERMS:
            bad = pending[np.argmax(width)]
            state = dict(context, lower_index=int(lo[bad]), upper_index=int(hi[bad]),
                         row=int(bad), max_terms=SERIES_MAX_TERMS)
            raise SeriesError("Tweedie series did not converge within the term cap", state)
        buckets = np.ceil(np.log2(width)).astype(int)
        still = []
        for b in np.unique(buckets):
            rows = pending[buckets == b]
            rlo, rhi = lo[rows], hi[rows]
            total, (first_t, second_t, last_t, prev_t) = _window_logsum(log_term, rows, rlo, rhi)
            cutoff = total + _LOG_RTOL
            # An all-underflow window is only accepted once it reaches k = 1;
            # small-k terms can survive where the window's terms underflow.
            empty = ~np.isfinite(total)
            left_ok = (rlo == 1) | (~empty & (first_t < cutoff) & (first_t <= second_t))
            right_ok = empty | ((last_t < cutoff) & (last_t <= prev_t))
            done = left_ok & right_ok
            out[rows[done]] = total[done]
            grow = rows[~left_ok]
            lo[grow] = np.maximum(lo[grow] - (hi[grow] - lo[grow] + 1), 1)
            grow = rows[~right_ok]
            hi[grow] = hi[grow] + (hi[grow] - lo[grow] + 1)
            still.append(rows[~done])
        pending = np.concatenate(still)
    return out


def _broadcast_tweedie(y, params: TweedieParams):
    y = np.asarray(y, dtype=float)
    cpg = params.derived()
    y, lam, shape, scale = np.broadcast_arrays(y, cpg.lam, cpg.jump_shape, cpg.jump_scale)
    return y, lam, shape, scale


def tweedie_p0(params: TweedieParams):
    return np.exp(-params.derived().lam)


def tweedie_logpdf(y, params: TweedieParams):
    """Log density of the continuous part, log sum_k Pois(k) Gamma(y; k*alpha, theta)."""
    y = np.asarray(y, dtype=float)
    _check(y > 0, "tweedie_logpdf requires y > 0")
    shape_out = np.broadcast(y, params.mu, params.phi, params.power).shape
    yb, lam, alpha, theta = (a.ravel() for a in _broadcast_tweedie(y, params))
    phi = np.broadcast_to(np.asarray(params.phi, dtype=float), shape_out).ravel()
    power = np.broadcast_to(np.asarray(params.power, dtype=float), shape_out).ravel()
    log_y, log_lam, log_theta = np.log(yb), np.log(lam), np.log(theta)

    def log_term(k, rows):
        ka = k * alpha[rows, None]
        return (k * log_lam[rows, None] - sc.gammaln(k + 1.0)
                + (ka - 1.0) * log_y[rows, None] - sc.gammaln(ka) - ka * log_theta[rows, None])

    # Mode of the jump-count terms does not depend on the mean; their
    # spread in k is about sqrt(k / (1 + alpha)).
    center = yb ** (2.0 - power) / (phi * (2.0 - power))
    spread = np.sqrt(np.maximum(center, 1.0) / (1.0 + alpha))
    logsum = _adaptive_logsum(log_term, center, spread, {"kind": "logpdf"})
    return (logsum - lam - yb / theta).reshape(shape_out)


def tweedie_cdf(y, params: TweedieParams):
    y = np.asarray(y, dtype=float)
    _check(y >= 0, "tweedie_cdf requires y >= 0")
    shape_out = np.broadcast(y, params.mu, params.phi, params.power).shape
    yb, lam, alpha, theta = (a.ravel() for a in _broadcast_tweedie(y, params))
    p0 = np.exp(-lam)
    out = p0.copy()
    pos = yb > 0
    if pos.any():
        yp, lp, ap, tp = yb[pos], lam[pos], alpha[pos], theta[pos]
        log_lam = np.log(lp)

        def log_term(k, rows):
            poisson = k * log_lam[rows, None] - lp[rows, None] - sc.gammaln(k + 1.0)
            return poisson + np.log(sc.gammainc(k * ap[rows, None], (yp / tp)[rows, None]))

        out[pos] = np.minimum(p0[pos] + np.exp(_adaptive_logsum(log_term, lp, np.sqrt(lp), {"kind": "cdf"})), 1.0)
    return out.reshape(shape_out)


def tweedie_sample(rng: np.random.Generator, params: TweedieParams, size=None):
    """Compound Poisson-gamma draws: Gamma(N*alpha, theta) given N ~ Poisson(lam), 0 if N = 0."""
    cpg = params.derived()
    if size is None:
        size = np.broadcast(cpg.lam, cpg.jump_scale).shape
    counts = rng.poisson(np.broadcast_to(cpg.lam, size))
    shape = counts * cpg.jump_shape
    draws = rng.gamma(np.where(counts > 0, shape, 1.0), np.broadcast_to(cpg.jump_scale, counts.shape))
    return np.where(counts > 0, draws, 0.0)
