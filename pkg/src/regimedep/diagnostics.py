"""Descriptive statistics and pre-modelling tests for return series."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaincc, ndtri


class DiagnosticsError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    test_name: str
    statistic: float
    p_value: float
    lag_or_df: int


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    sd: float
    max: float
    min: float
    skewness: float
    kurtosis: float  # raw (Pearson), not excess


def _nonconstant(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise DiagnosticsError("expected a 1-d sequence")
    if x.size < 2 or np.ptp(x) == 0:
        raise DiagnosticsError("constant input")
    return x


def chi2_sf(stat: float, df: int) -> float:
    """Upper-tail chi-square probability via the regularized incomplete gamma."""
    if stat <= 0:
        return 1.0
    return float(gammaincc(0.5 * df, 0.5 * stat))


def descriptive_stats(x) -> DescriptiveStats:
    x = _nonconstant(x)
    if x.size < 4:
        raise DiagnosticsError("need at least 4 observations")
    dev = x - x.mean()
    m2 = np.mean(dev**2)
    m3 = np.mean(dev**3)
    m4 = np.mean(dev**4)
    return DescriptiveStats(
        mean=float(x.mean()),
        sd=float(x.std(ddof=1)),
        max=float(x.max()),
        min=float(x.min()),
        skewness=float(m3 / m2**1.5),
        kurtosis=float(m4 / m2**2),
    )


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations at lags ``1..max_lag``."""
    x = _nonconstant(x)
    n = x.size
    if not 1 <= max_lag < n / 2:
        raise DiagnosticsError("max_lag must satisfy 1 <= max_lag < n/2")
    dev = x - x.mean()
    denom = np.dot(dev, dev)
    return np.array([np.dot(dev[:-k], dev[k:]) / denom for k in range(1, max_lag + 1)])


def ljung_box(x, lag: int) -> TestResult:
    x = _nonconstant(x)
    n = x.size
    rho = acf(x, lag)
    q = n * (n + 2) * np.sum(rho**2 / (n - np.arange(1, lag + 1)))
    return TestResult("ljung_box", float(q), chi2_sf(q, lag), lag)


def ljung_box_grid(x, lags) -> list[TestResult]:
    x = _nonconstant(x)
    n = x.size
    max_lag = max(lags)
    rho = acf(x, max_lag)
    terms = np.cumsum(rho**2 / (n - np.arange(1, max_lag + 1)))
    out = []
    for m in lags:
        q = n * (n + 2) * terms[m - 1]
        out.append(TestResult("ljung_box", float(q), chi2_sf(q, m), m))
    return out


def arch_lm_test(x, lag: int) -> TestResult:
    """Engle's LM test: regress x_t^2 on a constant and ``lag`` of its own lags; stat = n R^2."""
    x = np.asarray(x, dtype=float)
    n_total = x.size
    if not 1 <= lag < n_total / 2:
        raise DiagnosticsError("lag must satisfy 1 <= lag < n/2")
    e2 = x**2
    if np.ptp(e2) == 0:
        raise DiagnosticsError("singular regression: constant squared series")
    y = e2[lag:]
    design = np.column_stack([np.ones(y.size)] + [e2[lag - i:n_total - i] for i in range(1, lag + 1)])
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise DiagnosticsError("singular regression matrix")
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ coef
    tss = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / tss
    stat = y.size * r2
    return TestResult("arch_lm", float(stat), chi2_sf(stat, lag), lag)


def hill_estimator(x, k):
    """Hill tail-index estimate from the upper order statistics of ``x``.

    With ``x`` sorted ascending (0-based, length n) the estimate is
    ``k / sum_{i=1}^{k-1} (log x[n-i] - log x[n-k])``.  ``k`` may be an int or an
    array of ints (vectorized over the grid).
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = x.size
    ks = np.atleast_1d(np.asarray(k))
    if np.any(ks < 2) or np.any(ks >= n):
        raise DiagnosticsError("k must satisfy 2 <= k < n")
    kmax = int(ks.max())
    tail = x[n - kmax:]
    if np.any(tail <= 0):
        raise DiagnosticsError("nonpositive values in the upper tail")
    logs = np.log(tail)[::-1]  # logs[j] = log x[n-1-j]
    csum = np.concatenate([[0.0], np.cumsum(logs)])
    # sum_{i=1}^{k-1} log x[n-i] = csum[k-1]; reference log x[n-k] = logs[k-1]
    ref = logs[ks - 1]
    spacing = (csum[ks - 1] - (ks - 1) * ref) / ks
    if np.any(spacing <= 0):
        raise OverflowError("zero log-spacing in the upper order statistics: Hill estimate is infinite")
    alpha = 1.0 / spacing
    return float(alpha[0]) if np.ndim(k) == 0 else alpha


def qq_points(x, scaled: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Normal QQ coordinates: (matched normal quantiles, sorted sample).

    With ``scaled=True`` the quantiles are mapped through the sample mean and
    standard deviation; ``scaled=False`` returns standard normal quantiles.
    """
    x = _nonconstant(x)
    n = x.size
    if n < 10:
        raise DiagnosticsError("need at least 10 observations")
    probs = (np.arange(1, n + 1) - 0.5) / n
    theo = ndtri(probs)
    if scaled:
        theo = x.mean() + x.std(ddof=1) * theo
    return theo, np.sort(x)
