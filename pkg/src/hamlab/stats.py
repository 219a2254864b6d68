"""Estimators, goodness-of-fit statistics, and analytic oracles.

Tolerances throughout the experiment suite are k-standard-error bands
(k = 3 unless stated otherwise); variance comparisons use the normal
approximation with an empirical fourth-moment plug-in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sp_stats

from .errors import InvalidParameterError, UndefinedPValueError


@dataclass(frozen=True)
class TheoremConstants:
    """Drift and diffusion constants of the tagged-particle laws."""

    lam: float
    rho: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidParameterError("lam must be positive")
        if self.rho is not None and not 0 < self.rho < self.lam:
            raise InvalidParameterError("need 0 < rho < lam")

    @property
    def mu1(self) -> float:
        return -1.0 / self.lam**2

    @property
    def sigma1_sq(self) -> float:
        return 2.0 / self.lam**3

    @property
    def mu2(self) -> float:
        self._need_rho()
        return 1.0 / (self.lam * self.rho)

    @property
    def sigma2_sq(self) -> float:
        self._need_rho()
        return 2.0 / (self.lam * self.rho * (self.lam - self.rho))

    @property
    def eta(self) -> float:
        self._need_rho()
        return math.sqrt((self.lam - self.rho) / (self.lam * self.rho))

    def _need_rho(self):
        if self.rho is None:
            raise InvalidParameterError("rho required for two-class constants")


@dataclass(frozen=True)
class SummaryStats:
    n: int
    mean: float
    variance: float
    mean_se: float
    variance_se: float
    variance_ci: tuple[float, float]

    @classmethod
    def from_samples(cls, samples, k: float = 3.0) -> "SummaryStats":
        x = np.asarray(samples, dtype=np.float64)
        n = x.size
        if n < 2:
            raise InvalidParameterError("need at least two samples")
        mean = float(x.mean())
        var = float(x.var(ddof=1))
        mean_se = math.sqrt(var / n)
        m4 = float(((x - mean) ** 4).mean())
        var_se = math.sqrt(max(m4 - var**2, 0.0) / n)
        return cls(n, mean, var, mean_se, var_se, (var - k * var_se, var + k * var_se))


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    slope_se: float
    r_squared: float


def fit_loglog(ts, ys) -> FitResult:
    """Least-squares slope of log y against log t (>= 3 grid points)."""
    t = np.log(np.asarray(ts, dtype=np.float64))
    y = np.log(np.asarray(ys, dtype=np.float64))
    if t.size < 3:
        raise InvalidParameterError("log-log fit requires at least 3 grid points")
    n = t.size
    tbar, ybar = t.mean(), y.mean()
    sxx = float(((t - tbar) ** 2).sum())
    slope = float(((t - tbar) * (y - ybar)).sum() / sxx)
    intercept = float(ybar - slope * tbar)
    resid = y - (intercept + slope * t)
    s2 = float((resid**2).sum() / max(n - 2, 1))
    slope_se = math.sqrt(s2 / sxx)
    sst = float(((y - ybar) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / sst if sst > 0 else 1.0
    return FitResult(slope, intercept, slope_se, r2)


def normal_cdf(u):
    u = np.asarray(u, dtype=np.float64)
    return 0.5 * (1.0 + np.vectorize(math.erf)(u / math.sqrt(2.0)))


def _kolmogorov_sf(u: float) -> float:
    """P(sup |Brownian bridge| > u), the asymptotic null tail for sqrt(n) D."""
    if u < 1e-8:
        return 1.0
    total = 0.0
    for k in range(1, 101):
        term = math.exp(-2.0 * k * k * u * u)
        total += (-1) ** (k - 1) * term
        if term < 1e-16:
            break
    return min(max(2.0 * total, 0.0), 1.0)


def ks_statistic(samples, cdf):
    """One-sample Kolmogorov-Smirnov distance and asymptotic p-value.

    `cdf` is a callable reference distribution function.  The p-value uses
    the limiting Kolmogorov law for sqrt(n) D and needs n >= 50.
    """
    x = np.sort(np.asarray(samples, dtype=np.float64))
    n = x.size
    if n == 0:
        raise UndefinedPValueError("empty sample")
    f = np.asarray(cdf(x), dtype=np.float64)
    up = np.arange(1, n + 1) / n
    lo = np.arange(0, n) / n
    d = float(max(np.max(up - f), np.max(f - lo)))
    if n < 50:
        raise UndefinedPValueError(f"n={n} too small for the asymptotic p-value")
    return d, _kolmogorov_sf(math.sqrt(n) * d)


def ks_2samp(a, b):
    """Two-sample Kolmogorov-Smirnov distance and asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    n1, n2 = a.size, b.size
    if min(n1, n2) < 50:
        raise UndefinedPValueError("both samples need n >= 50 for the p approximation")
    allv = np.concatenate([a, b])
    cdf1 = np.searchsorted(a, allv, side="right") / n1
    cdf2 = np.searchsorted(b, allv, side="right") / n2
    d = float(np.max(np.abs(cdf1 - cdf2)))
    en = math.sqrt(n1 * n2 / (n1 + n2))
    return d, _kolmogorov_sf(en * d)


def chi2_statistic(counts, probs):
    """Pearson chi-square against given cell probabilities (df = cells - 1)."""
    o = np.asarray(counts, dtype=np.float64)
    p = np.asarray(probs, dtype=np.float64)
    if o.size != p.size or o.size < 2:
        raise InvalidParameterError("counts and probs must align, >= 2 cells")
    if not math.isclose(float(p.sum()), 1.0, rel_tol=1e-9):
        raise InvalidParameterError("probs must sum to 1")
    n = o.sum()
    e = n * p
    if np.any(e <= 0):
        raise InvalidParameterError("all expected counts must be positive")
    stat = float(((o - e) ** 2 / e).sum())
    return stat, float(sp_stats.chi2.sf(stat, df=o.size - 1))


def skellam_tail_oracle(a: float, b: float) -> float:
    """P(N_a + 1 > N_b) for independent Poissons, truncated double series.

    Truncation thresholds keep the neglected mass below 1e-12.
    """
    if a < 0 or b < 0:
        raise InvalidParameterError("a and b must be non-negative")
    if b == 0.0:
        return 1.0
    i_max = int(a + 14.0 * math.sqrt(a + 1.0) + 40.0)
    j_max = int(b + 14.0 * math.sqrt(b + 1.0) + 40.0)
    log_a = math.log(a) if a > 0 else -math.inf
    log_b = math.log(b)
    # P(N_a >= j) for j = 0..j_max, summed from the top for accuracy
    tail = np.zeros(j_max + 2)
    pmf_a = np.full(i_max + 1, -math.inf)
    for i in range(i_max + 1):
        pmf_a[i] = -a + i * log_a - math.lgamma(i + 1) if a > 0 else (0.0 if i == 0 else -math.inf)
    pa = np.exp(pmf_a)
    suffix = np.concatenate([np.cumsum(pa[::-1])[::-1], [0.0]])
    total = 0.0
    for j in range(j_max + 1):
        pb = math.exp(-b + j * log_b - math.lgamma(j + 1))
        total += pb * suffix[min(j, i_max + 1)]
    return min(max(total, 0.0), 1.0)


def covariance_with_se(x, y):
    """Sample covariance and the large-n standard error of the estimate."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n != y.size or n < 2:
        raise InvalidParameterError("need two aligned samples of length >= 2")
    zx = x - x.mean()
    zy = y - y.mean()
    prod = zx * zy
    cov = float(prod.sum() / (n - 1))
    se = float(prod.std(ddof=1) / math.sqrt(n))
    return cov, se


def mean_with_se(x):
    x = np.asarray(x, dtype=np.float64)
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def intervals_overlap(a, se_a, b, se_b, k: float = 3.0) -> bool:
    """k-SE interval overlap, the pass criterion for oracle-identity checks."""
    return abs(a - b) <= k * (se_a + se_b)
