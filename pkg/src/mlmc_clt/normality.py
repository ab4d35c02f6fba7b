"""Goodness of fit of normalised estimator samples against N(0, 1)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

KS_CRITICAL_5PCT = 1.3581

_SQRT2 = math.sqrt(2.0)


def std_normal_cdf(x):
    """Phi(x) through the complementary error function (scalar or array)."""
    if np.ndim(x) == 0:
        return 0.5 * math.erfc(-float(x) / _SQRT2)
    return 0.5 * erfc(-np.asarray(x, dtype=float) / _SQRT2)


def _pdf(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` by bracketed Newton iteration on Phi itself."""
    scalar = np.ndim(p) == 0
    p = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any((p <= 0) | (p >= 1)):
        raise ValueError("probabilities must lie strictly inside (0, 1)")
    lo = np.full_like(p, -40.0)
    hi = np.full_like(p, 40.0)
    # logistic starting point, accurate to ~0.01 in the bulk
    x = np.clip(np.log(p / (1 - p)) / 1.702, -38.0, 38.0)
    for _ in range(100):
        f = std_normal_cdf(x) - p
        lo = np.where(f < 0, x, lo)
        hi = np.where(f > 0, x, hi)
        step = f / np.maximum(_pdf(x), 1e-300)
        nxt = x - step
        outside = (nxt <= lo) | (nxt >= hi) | ~np.isfinite(nxt)
        nxt = np.where(outside, 0.5 * (lo + hi), nxt)
        if np.all(np.abs(nxt - x) <= 1e-15 * np.maximum(1.0, np.abs(x))):
            x = nxt
            break
        x = nxt
    return float(x[0]) if scalar else x


def ks_statistic(samples) -> float:
    """Kolmogorov-Smirnov distance between the empirical CDF and Phi."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_statistic needs at least one sample")
    cdf = std_normal_cdf(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))


def sample_moments(samples) -> tuple[float | None, float | None, float | None, float | None]:
    """Mean, unbiased variance, skewness and excess kurtosis; ``None`` where n is too small."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n == 0:
        return None, None, None, None
    mean = float(x.mean())
    if n < 2:
        return mean, None, None, None
    d = x - mean
    m2 = float(np.mean(d**2))
    variance = float(np.sum(d**2) / (n - 1))
    if m2 == 0:
        return mean, variance, None, None
    skew = float(np.mean(d**3)) / m2**1.5
    kurt = float(np.mean(d**4)) / m2**2 - 3.0 if n >= 4 else None
    return mean, variance, skew, kurt


def qq_points(samples) -> list[tuple[float, float]]:
    """Pairs (Phi^-1((i - 0.5)/n), x_(i))."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n < 2:
        raise ValueError("qq_points needs at least two samples")
    theo = std_normal_quantile((np.arange(1, n + 1) - 0.5) / n)
    return list(zip(theo.tolist(), x.tolist()))


def write_qq_csv(path, points) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["theoretical", "empirical"])
        for a, b in points:
            writer.writerow([repr(float(a)), repr(float(b))])


@dataclass(frozen=True)
class NormalityReport:
    n: int
    ks_stat: float | None
    mean: float | None
    variance: float | None
    skewness: float | None
    excess_kurtosis: float | None
    critical_value: float | None
    pass_5pct: bool | None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def normality_report(samples) -> NormalityReport:
    x = np.asarray(samples, dtype=float)
    n = int(x.size)
    if n == 0:
        return NormalityReport(0, None, None, None, None, None, None, None)
    ks = ks_statistic(x)
    crit = KS_CRITICAL_5PCT / math.sqrt(n)
    return NormalityReport(n, ks, *sample_moments(x), crit, bool(ks < crit))
