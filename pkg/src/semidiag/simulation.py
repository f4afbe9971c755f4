"""Seeded data generators and the replicated scenario runner.

Generators
----------
``two-part-gamma``
    Logistic zero part with coefficients (beta0, -2, -1) on (1, X1, X2)
    and a gamma positive part with log-mean (-1, -1, -2) and dispersion
    0.5, where X1 ~ N(0, 1) and X2 ~ Bernoulli(0.4).
``tobit``
    Latent Y* = 2 + 2 X1 + 2 X2 + sd * N(0, 1) with X1, X2 ~ U(-w, w),
    observed as 0 when Y* < 0.
``tweedie``
    Correctly specified Tweedie data, mu = exp(0.5 + X1) with X1 ~ N(0, 1);
    power and dispersion are free parameters (defaults 1.5 and 1).

Each replication r draws from a Philox stream keyed by ``seed + r`` so the
replications can run in any order, or concurrently, with identical output.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from .diagnostics import QQData, qq_against_normal, qq_against_uniform, ks_statistic
from .errors import DataError, SemidiagError
from .models import Dataset, FittedModel, fit_model
from .residuals import ResidualSet, proposed_residuals
from .special import TweedieParams, tweedie_sample

log = logging.getLogger(__name__)

COLUMNS = ("intercept", "x1", "x2")
GENERATORS = ("two-part-gamma", "tobit", "tweedie")
ARMS = ("twopart-gamma", "twopart-gb2", "tweedie", "tobit", "tobit-missing")

ZERO_SLOPES = (-2.0, -1.0)
POSITIVE_COEF = (-1.0, -1.0, -2.0)
GAMMA_DISPERSION = 0.5
TOBIT_COEF = (2.0, 2.0, 2.0)

DEFAULT_PARAMS = {
    "two-part-gamma": {"beta0_zero": -1.0},
    "tobit": {"sd": 0.2, "halfwidth": 1.0},
    "tweedie": {"power": 1.5, "phi": 1.0, "intercept": 0.5, "slope": 1.0},
}


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def gen_two_part_gamma(n: int, beta0_zero: float, seed: int) -> Dataset:
    rng = make_rng(seed)
    x1 = rng.standard_normal(n)
    x2 = (rng.random(n) < 0.4).astype(float)
    X = np.column_stack([np.ones(n), x1, x2])
    p0 = sc.expit(beta0_zero + ZERO_SLOPES[0] * x1 + ZERO_SLOPES[1] * x2)
    zero = rng.random(n) < p0
    mean = np.exp(X @ np.array(POSITIVE_COEF))
    shape = 1.0 / GAMMA_DISPERSION
    positive = rng.gamma(shape, mean * GAMMA_DISPERSION)
    return Dataset(X, np.where(zero, 0.0, positive), COLUMNS)


@dataclass(frozen=True)
class TobitTruth:
    latent: np.ndarray
    coef: tuple[float, ...]
    sd: float


def gen_tobit(n: int, sd: float, covariate_halfwidth: float, seed: int) -> tuple[Dataset, TobitTruth]:
    if sd <= 0:
        raise DataError("Tobit latent sd must be positive")
    if covariate_halfwidth not in (1.0, 1.5):
        raise DataError("covariate half-width must be 1.0 or 1.5")
    rng = make_rng(seed)
    w = covariate_halfwidth
    x1 = rng.uniform(-w, w, n)
    x2 = rng.uniform(-w, w, n)
    X = np.column_stack([np.ones(n), x1, x2])
    latent = X @ np.array(TOBIT_COEF) + sd * rng.standard_normal(n)
    y = np.where(latent < 0, 0.0, latent)
    return Dataset(X, y, COLUMNS), TobitTruth(latent, TOBIT_COEF, sd)


def gen_tweedie(n: int, seed: int, power: float = 1.5, phi: float = 1.0,
                intercept: float = 0.5, slope: float = 1.0) -> Dataset:
    """Correctly specified Tweedie data with one standard-normal covariate."""
    rng = make_rng(seed)
    x1 = rng.standard_normal(n)
    mu = np.exp(intercept + slope * x1)
    y = tweedie_sample(rng, TweedieParams(mu, phi, power))
    return Dataset(np.column_stack([np.ones(n), x1]), y, COLUMNS[:2])


def generate(generator: str, n: int, seed: int, params: dict) -> Dataset:
    p = {**DEFAULT_PARAMS[generator], **params}
    if generator == "two-part-gamma":
        return gen_two_part_gamma(n, p["beta0_zero"], seed)
    if generator == "tobit":
        return gen_tobit(n, p["sd"], p["halfwidth"], seed)[0]
    if generator == "tweedie":
        return gen_tweedie(n, seed, p["power"], p["phi"], p["intercept"], p["slope"])
    raise ValueError(f"unknown generator {generator!r}")


# ------------------------------------------------------------------ #
# Scenario runner
# ------------------------------------------------------------------ #


@dataclass(frozen=True)
class ScenarioConfig:
    generator: str = "two-part-gamma"
    n: int = 500
    seed: int = 0
    replications: int = 1
    arms: tuple[str, ...] = ("twopart-gamma", "tweedie")
    generator_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.n < 10:
            raise ValueError("scenario needs n >= 10")
        if self.replications < 1:
            raise ValueError("scenario needs at least one replication")
        if not self.arms:
            raise ValueError("scenario needs at least one fitting arm")
        for arm in self.arms:
            if arm not in ARMS:
                raise ValueError(f"unknown arm {arm!r}; expected one of {ARMS}")
        unknown = set(self.generator_params) - set(DEFAULT_PARAMS[self.generator])
        if unknown:
            raise ValueError(f"unknown parameters for {self.generator}: {sorted(unknown)}")
        if self.generator == "tobit":
            if self.params["sd"] <= 0:
                raise ValueError("Tobit latent sd must be positive")
            if self.params["halfwidth"] not in (1.0, 1.5):
                raise ValueError("covariate half-width must be 1.0 or 1.5")
        if self.generator == "tweedie" and not 1 < self.params["power"] < 2:
            raise ValueError("Tweedie power must lie in (1, 2)")
        object.__setattr__(self, "arms", tuple(self.arms))

    @property
    def params(self) -> dict:
        return {**DEFAULT_PARAMS[self.generator], **self.generator_params}

    @classmethod
    def from_mapping(cls, values: dict) -> "ScenarioConfig":
        """Build from string key/value pairs such as a parsed config file."""
        values = dict(values)
        generator = values.pop("generator", cls.generator)
        kwargs = {"generator": generator}
        if "n" in values:
            kwargs["n"] = int(values.pop("n"))
        if "seed" in values:
            kwargs["seed"] = int(values.pop("seed"))
        for key in ("replications", "reps"):
            if key in values:
                kwargs["replications"] = int(values.pop(key))
        if "arms" in values:
            arms = values.pop("arms")
            kwargs["arms"] = tuple(a.strip() for a in arms.split(",") if a.strip()) \
                if isinstance(arms, str) else tuple(arms)
        kwargs["generator_params"] = {k.replace("-", "_"): float(v) for k, v in values.items()}
        return cls(**kwargs)


@dataclass
class ArmOutcome:
    replication: int
    arm: str
    converged: bool
    ks: float = float("nan")
    model: FittedModel | None = None
    residuals: ResidualSet | None = None
    error: str = ""


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    outcomes: list[ArmOutcome]

    def arm_outcomes(self, arm: str) -> list[ArmOutcome]:
        return [o for o in self.outcomes if o.arm == arm]

    def ks_values(self, arm: str) -> np.ndarray:
        return np.array([o.ks for o in self.arm_outcomes(arm) if o.converged])

    def aggregate(self) -> dict[str, dict]:
        out = {}
        for arm in self.config.arms:
            ks = self.ks_values(arm)
            failures = sum(not o.converged for o in self.arm_outcomes(arm))
            if ks.size:
                q05, q50, q95 = np.quantile(ks, [0.05, 0.5, 0.95])
                sd = float(np.std(ks, ddof=1)) if ks.size > 1 else 0.0
                out[arm] = {"mean_ks": float(ks.mean()), "sd_ks": sd,
                            "se_mean_ks": sd / float(np.sqrt(ks.size)), "q05_ks": float(q05),
                            "median_ks": float(q50), "q95_ks": float(q95),
                            "fits": int(ks.size), "failures": failures}
            else:
                out[arm] = {"mean_ks": float("nan"), "fits": 0, "failures": failures}
        return out

    def qq(self, arm: str, replication: int = 0) -> tuple[QQData, QQData] | None:
        for o in self.arm_outcomes(arm):
            if o.replication == replication and o.residuals is not None:
                return qq_against_uniform(o.residuals.proposed), qq_against_normal(o.residuals.normal_scale)
        return None


def arm_design(arm: str, data: Dataset) -> Dataset:
    if arm == "tobit-missing":
        return data.select(("intercept", "x1"))
    return data


def fit_arm(arm: str, data: Dataset) -> FittedModel:
    name = "tobit" if arm == "tobit-missing" else arm
    return fit_model(name, data)


def model_residuals(model: FittedModel, data: Dataset) -> ResidualSet:
    return proposed_residuals(model.p0(data.design), model.cdf(data.response, data.design))


def _run_replication(config: ScenarioConfig, rep: int, keep_residuals: bool) -> list[ArmOutcome]:
    data = generate(config.generator, config.n, config.seed + rep, config.generator_params)
    outcomes = []
    for arm in config.arms:
        arm_data = arm_design(arm, data)
        try:
            model = fit_arm(arm, arm_data)
            res = model_residuals(model, arm_data)
        except SemidiagError as exc:
            log.warning("replication %d arm %s failed: %s", rep, arm, exc)
            outcomes.append(ArmOutcome(rep, arm, False, error=str(exc)))
            continue
        outcomes.append(ArmOutcome(rep, arm, True, ks_statistic(res.proposed), model,
                                   res if keep_residuals or rep == 0 else None))
    return outcomes


def worker_count() -> int:
    env = os.environ.get("SEMIDIAG_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_scenario(config: ScenarioConfig, keep_residuals: bool = False,
                 threads: int | None = None) -> ScenarioResult:
    """Generate, fit every arm and score the proposed residuals, per replication.

    Residual sets are kept for replication 0 (for QQ output) and for every
    replication when ``keep_residuals`` is set.
    """
    threads = worker_count() if threads is None else threads
    reps = range(config.replications)
    if threads > 1 and config.replications > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(lambda r: _run_replication(config, r, keep_residuals), reps))
    else:
        chunks = [_run_replication(config, r, keep_residuals) for r in reps]
    return ScenarioResult(config, [o for chunk in chunks for o in chunk])
