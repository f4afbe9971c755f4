"""Residuals for semicontinuous regression.

The main residual is the double probability-integral transform
``r_i = H_hat(F_hat(Y_i | X_i))`` with

    H_hat(s) = (s / n) * #{j : p0_hat(X_j) <= s},

which is uniform in the limit under a correctly specified model even
though ``F_hat(Y_i | X_i)`` itself is not (the point mass at zero puts
every zero outcome exactly at its own ``p0_hat``).  The baselines used to
show that failure (Cox-Snell, Pearson, deviance, randomized quantile)
live here too.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, DomainError
from .special import normal_quantile


@dataclass(frozen=True)
class HEstimator:
    """Empirical H built from a pool of fitted zero probabilities."""

    sorted_p0: np.ndarray

    @classmethod
    def from_pool(cls, p0_values) -> "HEstimator":
        pool = np.asarray(p0_values, dtype=float).ravel()
        if pool.size == 0:
            raise DomainError("cannot build H from an empty pool")
        # Closed interval: a fitted p0 can underflow to exactly 0.
        if not np.all((pool >= 0) & (pool <= 1)):
            raise DomainError("pool values must lie in [0, 1]")
        return cls(np.sort(pool))

    @property
    def n(self) -> int:
        return self.sorted_p0.size

    def count_le(self, s) -> np.ndarray:
        """Number of pool values <= s (inclusive), by binary search."""
        return np.searchsorted(self.sorted_p0, s, side="right")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        # count <= n, so the minimum only removes a possible 1-ulp overshoot
        # of (s / n) * n above s.
        return np.minimum(s, (s / self.n) * self.count_le(s))


def build_h(p0_values) -> HEstimator:
    return HEstimator.from_pool(p0_values)


@dataclass(frozen=True)
class ResidualSet:
    p0_hat: np.ndarray
    cdf_value: np.ndarray
    proposed: np.ndarray
    normal_scale: np.ndarray

    def __len__(self):
        return self.proposed.size


def _validate_pair(p0_values, cdf_values) -> tuple[np.ndarray, np.ndarray]:
    p0 = np.asarray(p0_values, dtype=float).ravel()
    cdf = np.asarray(cdf_values, dtype=float).ravel()
    if p0.size != cdf.size:
        raise DataError(f"p0 has {p0.size} entries but cdf has {cdf.size}")
    if p0.size == 0:
        raise DataError("no observations")
    bad = np.flatnonzero(~(cdf >= p0))
    if bad.size:
        i = int(bad[0])
        raise DataError(f"observation {i}: cdf value {float(cdf[i])!r} is below p0 {float(p0[i])!r}")
    bad = np.flatnonzero(cdf > 1)
    if bad.size:
        raise DataError(f"observation {int(bad[0])}: cdf value exceeds 1")
    return p0, cdf


def proposed_residuals(p0_values, cdf_values) -> ResidualSet:
    """r_i = H_hat(F_hat_i) with H_hat pooled over the same sample's p0 values."""
    p0, cdf = _validate_pair(p0_values, cdf_values)
    h = build_h(p0)
    r = h(cdf)
    return ResidualSet(p0, cdf, r, normal_transform(r))


def out_of_sample_errors(p0_tilde, cdf_tilde) -> ResidualSet:
    """Held-out analogue: pool and CDF values both come from the held-out rows."""
    return proposed_residuals(p0_tilde, cdf_tilde)


def normal_transform(residuals, n: int | None = None) -> np.ndarray:
    """Phi^{-1} of residuals clamped to [1/(4n), 1 - 1/(4n)]."""
    r = np.asarray(residuals, dtype=float)
    n = r.size if n is None else n
    eps = 1.0 / (4.0 * n)
    return normal_quantile(np.clip(r, eps, 1.0 - eps))


# ------------------------------------------------------------------ #
# Baselines
# ------------------------------------------------------------------ #


def cox_snell(cdf_values) -> np.ndarray:
    """Cox-Snell residuals are the fitted CDF values themselves."""
    return np.array(cdf_values, dtype=float)


def pearson_residuals(y, mean, variance) -> np.ndarray:
    variance = np.asarray(variance, dtype=float)
    if np.any(variance <= 0):
        raise DomainError("variance must be positive")
    return (np.asarray(y, dtype=float) - np.asarray(mean, dtype=float)) / np.sqrt(variance)


def tweedie_unit_deviance(y, mu, power) -> np.ndarray:
    if not 1 < power < 2:
        raise DomainError("Tweedie power must lie in (1, 2)")
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    # y^(2-p) -> 0 as y -> 0 since 2 - p > 0.
    y_term = np.where(y > 0, y ** (2.0 - power), 0.0) / ((1.0 - power) * (2.0 - power))
    dev = 2.0 * (y_term - y * mu ** (1.0 - power) / (1.0 - power) + mu ** (2.0 - power) / (2.0 - power))
    return np.maximum(dev, 0.0)


def tweedie_deviance_residuals(y, mu, phi, power) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    mu = np.asarray(mu, dtype=float)
    return np.sign(y - mu) * np.sqrt(tweedie_unit_deviance(y, mu, power) / phi)


def randomized_quantile_residuals(p0, cdf, is_zero, rng_seed) -> np.ndarray:
    """Jittered residuals: u ~ U(0, p0_i) for zeros, u = F_hat_i otherwise; returns Phi^{-1}(u).

    The zero-outcome values depend on the random draw, so two seeds give
    two different residual sets for the same fit.
    """
    p0 = np.asarray(p0, dtype=float)
    u = np.array(cdf, dtype=float)
    zero = np.asarray(is_zero, dtype=bool)
    rng = np.random.default_rng(rng_seed)
    draws = rng.random(p0.shape)
    u[zero] = draws[zero] * p0[zero]
    tiny = np.finfo(float).tiny
    return normal_quantile(np.clip(u, tiny, 1.0 - np.finfo(float).epsneg))
