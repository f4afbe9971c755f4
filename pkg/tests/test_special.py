import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from semidiag.errors import DomainError
from semidiag.special import (
    CpgDerived, GammaParams, GB2Params, TweedieParams, gamma_cdf, gamma_quantile, gb2_cdf,
    gb2_logpdf, gb2_sample, log_gamma, normal_cdf, normal_quantile, tweedie_cdf,
    tweedie_logpdf, tweedie_p0, tweedie_sample,
)
import semidiag.special as special


def bisect(f, target, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def std_normal_pdf(z):
    return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)


# ---------------------------------------------------------------- log_gamma


def test_log_gamma_integers():
    assert log_gamma(1.0) == 0.0
    assert log_gamma(2.0) == 0.0


def test_log_gamma_recurrence_from_half():
    # log G(10.5) = log G(0.5) + sum_{k=0}^{9} log(k + 0.5)
    expected = math.log(math.sqrt(math.pi)) + sum(math.log(k + 0.5) for k in range(10))
    assert log_gamma(10.5) == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("x", [0.0, -1.0, -0.5])
def test_log_gamma_domain(x):
    with pytest.raises(DomainError):
        log_gamma(x)


# ---------------------------------------------------------------- normal


def test_normal_cdf_values():
    assert normal_cdf(0.0) == 0.5
    assert abs(normal_cdf(40.0) - 1.0) <= 1e-15
    # Trapezoid rule on [-12, 1]; the mass below -12 is ~1e-33.
    grid = np.linspace(-12.0, 1.0, 200_001)
    dens = np.exp(-0.5 * grid**2) / math.sqrt(2 * math.pi)
    trap = float(np.sum((dens[1:] + dens[:-1]) * np.diff(grid)) / 2)
    assert normal_cdf(1.0) == pytest.approx(trap, abs=1e-10)


@given(st.floats(-30, 30))
def test_normal_cdf_symmetry(z):
    assert abs(normal_cdf(-z) - (1 - normal_cdf(z))) <= 1e-14


def test_normal_quantile_values():
    assert normal_quantile(0.5) == 0.0
    z = bisect(normal_cdf, 0.975, -10, 10)
    assert normal_quantile(0.975) == pytest.approx(z, abs=1e-12)
    assert normal_quantile(0.2) == pytest.approx(-normal_quantile(0.8), abs=1e-14)


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_normal_quantile_domain(u):
    with pytest.raises(DomainError):
        normal_quantile(u)


@given(st.floats(1e-12, 1 - 1e-12))
def test_normal_round_trip(u):
    assert abs(normal_cdf(normal_quantile(u)) - u) <= 1e-10


# ---------------------------------------------------------------- gamma


def test_gamma_cdf_cases():
    assert gamma_cdf(0.0, GammaParams(2.3, 1.7)) == 0.0
    for y in (0.1, 1.0, 4.0):
        assert gamma_cdf(y, GammaParams(1.0, 2.5)) == pytest.approx(1 - math.exp(-y / 2.5), rel=1e-14)
    quad, _ = integrate.quad(lambda t: t * math.exp(-t), 0, 3.0, epsabs=1e-14)
    assert gamma_cdf(3.0, GammaParams(2.0, 1.0)) == pytest.approx(quad, abs=1e-12)


def test_gamma_params_invalid():
    with pytest.raises(DomainError):
        GammaParams(0.0, 1.0)
    with pytest.raises(DomainError):
        GammaParams(1.0, -1.0)


def test_gamma_quantile_cases():
    assert gamma_quantile(0.0, GammaParams(3.0, 2.0)) == 0.0
    assert gamma_quantile(1 - math.exp(-2), GammaParams(1.0, 1.0)) == pytest.approx(2.0, rel=1e-12)
    params = GammaParams(2.5, 0.4)
    root = bisect(lambda y: gamma_cdf(y, params), 0.7, 0.0, 50.0)
    assert gamma_quantile(0.7, params) == pytest.approx(root, rel=1e-10)
    with pytest.raises(DomainError):
        gamma_quantile(1.0, params)


@pytest.mark.parametrize("shape,scale", [(0.3, 1.0), (2.0, 0.5), (25.0, 3.0)])
def test_quantile_round_trips(shape, scale):
    u = np.linspace(0.01, 0.99, 99)
    params = GammaParams(shape, scale)
    assert np.max(np.abs(gamma_cdf(gamma_quantile(u, params), params) - u)) <= 1e-9
    assert np.max(np.abs(normal_cdf(normal_quantile(u)) - u)) <= 1e-9


# ---------------------------------------------------------------- GB2


def test_gb2_cdf_cases():
    assert gb2_cdf(0.0, GB2Params(1.3, 2.0, 0.7, 1.1)) == 0.0
    assert gb2_cdf(2.0, GB2Params(3.0, 2.0, 1.0, 1.0)) == pytest.approx(0.5, abs=1e-15)
    params = GB2Params(1.5, 1.0, 2.0, 3.0)
    quad, _ = integrate.quad(lambda t: math.exp(gb2_logpdf(t, params)), 0, 2.0, epsabs=1e-13)
    assert gb2_cdf(2.0, params) == pytest.approx(quad, abs=1e-10)
    assert gb2_cdf(1e12, params) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("params", [GB2Params(1.5, 1.0, 2.0, 3.0), GB2Params(0.8, 3.0, 1.2, 2.5),
                                    GB2Params(4.0, 0.5, 0.7, 0.9)])
def test_gb2_logpdf_normalises(params):
    total, _ = integrate.quad(lambda t: math.exp(gb2_logpdf(t, params)), 0, np.inf, limit=500,
                              epsabs=1e-12, epsrel=1e-12)
    assert total == pytest.approx(1.0, abs=1e-6)


def test_gb2_logpdf_log_logistic_case():
    b = 2.5
    y = np.array([0.1, 1.0, 7.0])
    expected = -math.log(b) - 2 * np.log1p(y / b)
    np.testing.assert_allclose(gb2_logpdf(y, GB2Params(1.0, b, 1.0, 1.0)), expected, rtol=1e-13)


def test_gb2_logpdf_matches_cdf_derivative():
    params = GB2Params(1.7, 1.3, 1.4, 2.2)
    for y in (0.3, 1.0, 3.5):
        h = 1e-6 * y
        slope = (gb2_cdf(y + h, params) - gb2_cdf(y - h, params)) / (2 * h)
        assert math.exp(gb2_logpdf(y, params)) == pytest.approx(slope, rel=1e-6)


def test_gb2_logpdf_domain():
    with pytest.raises(DomainError):
        gb2_logpdf(0.0, GB2Params(1, 1, 1, 1))


def test_gb2_approaches_gamma():
    shape, scale, q = 2.0, 1.5, 1e4
    y = np.linspace(0.05, 12.0, 60)
    diff = gb2_cdf(y, GB2Params(1.0, scale * q, shape, q)) - gamma_cdf(y, GammaParams(shape, scale))
    assert np.max(np.abs(diff)) <= 1e-3


def test_gb2_sampler_matches_cdf():
    params = GB2Params(2.0, 1.5, 1.5, 2.5)
    draws = gb2_sample(np.random.default_rng(11), params, size=200_000)
    for y in (0.5, 1.5, 4.0):
        f = gb2_cdf(y, params)
        assert abs(np.mean(draws <= y) - f) <= 4 * math.sqrt(f * (1 - f) / draws.size)


# ---------------------------------------------------------------- Tweedie


def test_cpg_derivation_round_trip():
    params = TweedieParams(2.3, 0.7, 1.35)
    d = CpgDerived.from_tweedie(params)
    mu, phi, p = 2.3, 0.7, 1.35
    assert d.lam == pytest.approx(mu ** (2 - p) / (phi * (2 - p)), rel=1e-14)
    assert d.jump_shape == pytest.approx((2 - p) / (p - 1), rel=1e-14)
    assert d.jump_scale == pytest.approx(phi * (p - 1) * mu ** (p - 1), rel=1e-14)
    # mean lam * alpha * theta reproduces mu
    assert d.lam * d.jump_shape * d.jump_scale == pytest.approx(mu, rel=1e-14)
    assert 0 < math.exp(-d.lam) < 1


@pytest.mark.parametrize("kwargs", [dict(mu=0, phi=1, power=1.5), dict(mu=1, phi=0, power=1.5),
                                    dict(mu=1, phi=1, power=1.0), dict(mu=1, phi=1, power=2.0)])
def test_tweedie_params_invalid(kwargs):
    with pytest.raises(DomainError):
        TweedieParams(**kwargs)


def test_tweedie_p0_values_and_limits():
    assert tweedie_p0(TweedieParams(1.0, 1.0, 1.5)) == pytest.approx(math.exp(-2.0), rel=1e-15)
    assert tweedie_p0(TweedieParams(1e-12, 1.0, 1.5)) == pytest.approx(1.0, abs=1e-5)
    assert tweedie_p0(TweedieParams(1.0, 1e9, 1.5)) == pytest.approx(1.0, abs=1e-8)


def test_tweedie_p0_monte_carlo():
    params = TweedieParams(1.0, 1.0, 1.5)
    draws = tweedie_sample(np.random.default_rng(5), params, size=1_000_000)
    p = math.exp(-2.0)
    assert abs(np.mean(draws == 0) - p) <= 3 * math.sqrt(p * (1 - p) / draws.size)


def test_tweedie_cdf_definition_at_zero():
    params = TweedieParams(np.array([0.3, 1.0, 7.0]), 1.3, np.array([1.2, 1.5, 1.8]))
    np.testing.assert_array_equal(tweedie_cdf(np.zeros(3), params), tweedie_p0(params))


def test_tweedie_cdf_monte_carlo():
    params = TweedieParams(1.0, 1.0, 1.5)
    draws = tweedie_sample(np.random.default_rng(6), params, size=1_000_000)
    band = 3 * math.sqrt(0.25 / draws.size)
    assert abs(np.mean(draws <= 1.0) - tweedie_cdf(1.0, params)) <= band


def test_tweedie_cdf_tail():
    for mu in (0.2, 1.0, 30.0):
        assert tweedie_cdf(1e6 * mu, TweedieParams(mu, 1.0, 1.5)) >= 1 - 1e-8


@pytest.mark.parametrize("mu,phi,p", [(1.0, 1.0, 1.5), (3.0, 0.5, 1.2), (0.4, 2.0, 1.8), (20.0, 1.0, 1.6)])
def test_tweedie_density_normalises(mu, phi, p):
    params = TweedieParams(mu, phi, p)
    f = lambda y: math.exp(tweedie_logpdf(y, params))
    total = sum(integrate.quad(f, a, b, limit=400, epsabs=1e-13)[0]
                for a, b in [(0, mu), (mu, 10 * mu), (10 * mu, np.inf)])
    assert total + tweedie_p0(params) == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("y", [0.05, 0.7, 2.0, 9.0])
def test_tweedie_density_is_cdf_derivative(y):
    params = TweedieParams(1.4, 0.8, 1.4)
    h = 1e-4 * y
    slope = (tweedie_cdf(y + h, params) - tweedie_cdf(y - h, params)) / (2 * h)
    assert math.exp(tweedie_logpdf(y, params)) == pytest.approx(slope, rel=1e-5)


def test_tweedie_window_widening_is_stable(monkeypatch):
    params = TweedieParams(np.array([0.5, 2.0, 15.0]), 1.2, 1.45)
    y = np.array([0.3, 2.5, 40.0])
    base_pdf = tweedie_logpdf(y, params)
    base_cdf = tweedie_cdf(y, params)
    original = special._adaptive_logsum

    def doubled(log_term, center, spread, context):
        return original(log_term, center, 2 * spread + 10, context)

    monkeypatch.setattr(special, "_adaptive_logsum", doubled)
    np.testing.assert_allclose(tweedie_logpdf(y, params), base_pdf, rtol=0, atol=1e-10)
    np.testing.assert_allclose(tweedie_cdf(y, params), base_cdf, rtol=0, atol=1e-10)


def test_tweedie_series_cap_reports_state(monkeypatch):
    from semidiag.errors import SeriesError
    monkeypatch.setattr(special, "SERIES_MAX_TERMS", 20)
    with pytest.raises(SeriesError) as info:
        tweedie_logpdf(500.0, TweedieParams(500.0, 0.01, 1.5))
    assert info.value.state["max_terms"] == 20
    assert "lower_index" in info.value.state


@settings(max_examples=40, deadline=None)
@given(mu=st.floats(0.05, 50), phi=st.floats(0.1, 5), p=st.floats(1.05, 1.95),
       ys=st.lists(st.floats(0, 100), min_size=2, max_size=8))
def test_cdfs_monotone(mu, phi, p, ys):
    ys = np.sort(np.array(ys))
    tw = tweedie_cdf(ys, TweedieParams(mu, phi, p))
    assert np.all(np.diff(tw) >= -1e-12)
    assert np.all(np.diff(gamma_cdf(ys, GammaParams(phi, mu))) >= 0)
    assert np.all(np.diff(gb2_cdf(ys, GB2Params(p, mu, phi, 1.5))) >= -1e-15)
    assert np.all(np.diff(normal_cdf(ys - mu)) >= 0)
    assert tweedie_p0(TweedieParams(mu, phi, p)) == tweedie_cdf(0.0, TweedieParams(mu, phi, p))
