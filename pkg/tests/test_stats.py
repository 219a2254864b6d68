import math

import numpy as np
import pytest
from scipy import stats as sp_stats

from hamlab.errors import InvalidParameterError, UndefinedPValueError
from hamlab.rng import RngStream
from hamlab.stats import (
    SummaryStats,
    TheoremConstants,
    chi2_statistic,
    fit_loglog,
    ks_2samp,
    ks_statistic,
    normal_cdf,
    skellam_tail_oracle,
)


def test_constants():
    tc = TheoremConstants(1.0)
    assert tc.mu1 == -1.0 and tc.sigma1_sq == 2.0
    tc = TheoremConstants(2.0, 1.0)
    assert tc.mu2 == 0.5
    assert tc.sigma2_sq == 1.0
    assert math.isclose(tc.eta, math.sqrt(0.5))
    with pytest.raises(InvalidParameterError):
        TheoremConstants(1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        TheoremConstants(1.0).mu2


def test_skellam_oracle_edges():
    assert skellam_tail_oracle(3.0, 0.0) == 1.0
    assert math.isclose(skellam_tail_oracle(0.0, 1.0), math.exp(-1.0), rel_tol=1e-12)
    # frozen value computed by the brute-force truncated double sum
    assert math.isclose(skellam_tail_oracle(1.0, 1.0), 0.6542541612768356, rel_tol=1e-10)


def test_skellam_oracle_against_scipy():
    for a, b in [(1.0, 1.0), (12.0, 8.0), (4.0, 0.5), (0.3, 9.0), (25.0, 25.0)]:
        ref = float(sp_stats.skellam.cdf(0, b, a))
        assert math.isclose(skellam_tail_oracle(a, b), ref, rel_tol=1e-10, abs_tol=1e-12)


def test_skellam_oracle_against_mc():
    gen = RngStream(100).generator()
    n = 10_000_000
    a = gen.poisson(1.0, size=n)
    b = gen.poisson(1.0, size=n)
    p_hat = np.mean(a + 1 > b)
    se = math.sqrt(p_hat * (1 - p_hat) / n)
    assert abs(p_hat - skellam_tail_oracle(1.0, 1.0)) <= 4 * se


def test_ks_calibration():
    # uniform p-values under the null: small-p fraction stays near level
    gen = RngStream(101).generator()
    small = 0
    for _ in range(500):
        x = gen.random(10_000)
        d, p = ks_statistic(x, lambda v: np.asarray(v))
        small += p < 0.01
    assert small / 500 <= 0.03


def test_ks_power_and_small_sample():
    gen = RngStream(102).generator()
    x = gen.random(10_000) + 0.1
    d, p = ks_statistic(x, lambda v: np.clip(np.asarray(v), 0, 1))
    assert p < 1e-6
    with pytest.raises(UndefinedPValueError):
        ks_statistic(gen.random(10), lambda v: np.asarray(v))


def test_ks_2samp_null():
    gen = RngStream(103).generator()
    d, p = ks_2samp(gen.standard_normal(5000), gen.standard_normal(5000))
    assert p > 0.01


def test_chi2():
    counts = [250, 250, 250, 250]
    stat, p = chi2_statistic(counts, [0.25] * 4)
    assert stat == 0.0 and p == 1.0
    stat, p = chi2_statistic([400, 100, 250, 250], [0.25] * 4)
    assert p < 1e-6
    with pytest.raises(InvalidParameterError):
        chi2_statistic([1, 2], [0.5, 0.6])


def test_fit_loglog():
    ts = [10.0, 20.0, 40.0, 80.0]
    ys = [2.0 * t ** (2.0 / 3.0) for t in ts]
    fit = fit_loglog(ts, ys)
    assert math.isclose(fit.slope, 2.0 / 3.0, rel_tol=1e-9)
    assert math.isclose(fit.intercept, math.log(2.0), rel_tol=1e-9)
    assert fit.r_squared > 0.999999
    with pytest.raises(InvalidParameterError):
        fit_loglog([1.0, 2.0], [1.0, 2.0])


def test_summary_stats():
    gen = RngStream(104).generator()
    x = gen.standard_normal(50_000) * 2.0 + 3.0
    s = SummaryStats.from_samples(x)
    assert abs(s.mean - 3.0) <= 4 * s.mean_se
    assert abs(s.variance - 4.0) <= 4 * s.variance_se
    assert s.variance_ci[0] < 4.0 < s.variance_ci[1]


def test_normal_cdf():
    assert math.isclose(float(normal_cdf(0.0)), 0.5, rel_tol=1e-12)
    assert math.isclose(float(normal_cdf(1.96)), 0.9750021, rel_tol=1e-5)
