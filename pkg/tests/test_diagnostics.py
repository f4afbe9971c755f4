import math
from pathlib import Path
from xml.etree import ElementTree

import numpy as np
import pytest
from hypothesis import given, strategies as st

from semidiag.diagnostics import (
    histogram_table, kolmogorov_sf, ks_statistic, ks_uniform, plotting_positions,
    qq_against_normal, qq_against_uniform, render_qq_svg,
)
from semidiag.errors import DomainError
from semidiag.residuals import normal_transform
from semidiag.special import normal_quantile

DATA = Path(__file__).parent / "data"
SVG = "{http://www.w3.org/2000/svg}"


def ecdf_distance(r):
    """sup |ECDF - s| by checking both sides of every jump directly."""
    r = np.asarray(r)
    best = 0.0
    for x in np.unique(r):
        below = np.mean(r < x)
        at = np.mean(r <= x)
        best = max(best, abs(at - x), abs(below - x))
    return best


# ---------------------------------------------------------------- QQ data


def test_qq_uniform_cases():
    qq = qq_against_uniform([0.75, 0.25])
    np.testing.assert_array_equal(qq.theoretical, [0.25, 0.75])
    np.testing.assert_array_equal(qq.sample, [0.25, 0.75])
    grid = plotting_positions(9)
    qq = qq_against_uniform(grid[::-1])
    np.testing.assert_array_equal(qq.sample, qq.theoretical)
    r = np.random.default_rng(1).random(31)
    np.testing.assert_array_equal(qq_against_uniform(r).sample, sorted(r.tolist()))
    with pytest.raises(DomainError):
        qq_against_uniform([0.3])


def test_qq_normal_cases():
    qq = qq_against_normal([0.1, -0.1])
    assert qq.theoretical[0] == pytest.approx(-qq.theoretical[1], abs=1e-15)
    assert qq.theoretical[0] == normal_quantile(0.25)
    z = normal_quantile(plotting_positions(11))
    np.testing.assert_allclose(qq_against_normal(z).sample, qq_against_normal(z).theoretical)
    r = np.random.default_rng(2).uniform(0.05, 0.95, 9)
    composed = normal_quantile(qq_against_uniform(r).sample)
    np.testing.assert_allclose(qq_against_normal(normal_transform(r)).sample, composed, rtol=1e-14)
    np.testing.assert_allclose(qq_against_normal(r).theoretical,
                               normal_quantile(qq_against_uniform(r).theoretical), rtol=1e-14)
    with pytest.raises(DomainError):
        qq_against_normal([])


def test_qq_csv():
    text = qq_against_uniform([0.2, 0.6]).to_csv()
    assert text == "theoretical,sample\n0.25,0.2\n0.75,0.6\n"


# ---------------------------------------------------------------- KS


def test_ks_closed_forms():
    for n in (1, 5, 40):
        grid = plotting_positions(n)
        assert ks_uniform(grid).ks_statistic == pytest.approx(1 / (2 * n), abs=1e-15)
    assert ks_uniform([0.5] * 4).ks_statistic == pytest.approx(ecdf_distance([0.5] * 4)) == 0.5


@given(st.lists(st.floats(0, 1), min_size=1, max_size=60))
def test_ks_matches_direct_ecdf(values):
    assert ks_statistic(values) == pytest.approx(ecdf_distance(values), abs=1e-12)


def test_ks_permutation_invariant():
    r = np.random.default_rng(3).random(200)
    assert ks_statistic(r) == ks_statistic(r[::-1]) == ks_statistic(np.random.default_rng(4).permutation(r))


def test_ks_domain():
    with pytest.raises(DomainError):
        ks_uniform([0.2, 1.2])
    with pytest.raises(DomainError):
        ks_uniform([])


def test_kolmogorov_sf_reference_values():
    # classical 5% and 1% critical values of the Kolmogorov distribution
    assert kolmogorov_sf(1.3580986) == pytest.approx(0.05, abs=1e-6)
    assert kolmogorov_sf(1.6276236) == pytest.approx(0.01, abs=1e-6)
    ts = np.linspace(0.2, 3, 50)
    assert np.all(np.diff([kolmogorov_sf(t) for t in ts]) <= 0)
    assert kolmogorov_sf(0.0) == 1.0


def test_pvalue_calibration_on_uniform_draws():
    ok = 0
    for seed in range(100):
        r = np.random.Generator(np.random.Philox(seed)).random(10_000)
        ok += ks_uniform(r).ks_pvalue_asymptotic > 0.001
    assert ok >= 99


def test_report_text():
    rep = ks_uniform([0.25, 0.75])
    text = rep.to_text()
    assert text.splitlines()[0] == "n=2"
    assert "pvalue_is_approximate=true" in text
    assert 0 <= rep.ks_statistic <= 1


def test_histogram_table():
    text = histogram_table([0.0, 0.01, 0.5, 0.99, 1.0])
    lines = text.splitlines()
    assert lines[0] == "bin_lower,bin_upper,count"
    assert len(lines) == 21
    counts = [int(line.split(",")[2]) for line in lines[1:]]
    assert sum(counts) == 5 and counts[0] == 2 and counts[-1] == 2 and counts[10] == 1


# ---------------------------------------------------------------- SVG


def test_svg_structure():
    doc = render_qq_svg(qq_against_uniform([0.3, 0.6]), "two points")
    root = ElementTree.fromstring(doc.encode())
    assert root.get("width") == "600" and root.get("height") == "600"
    assert len(root.findall(f".//{SVG}circle")) == 2
    assert len(root.findall(f".//{SVG}line[@class='reference']")) == 1
    assert "Uniform quantiles" in doc
    assert "Standard normal quantiles" in render_qq_svg(qq_against_normal([0.3, -0.6]), "n")


def test_svg_deterministic_and_escaped():
    qq = qq_against_normal(np.random.default_rng(5).standard_normal(50))
    assert render_qq_svg(qq, "a & b") == render_qq_svg(qq, "a & b")
    ElementTree.fromstring(render_qq_svg(qq, "a & <b>").encode())


def test_svg_golden():
    r = (np.arange(20) * 7 % 20 + 0.37) / 20
    doc = render_qq_svg(qq_against_uniform(r), "golden sample")
    assert doc == (DATA / "golden_qq_20.svg").read_text()
