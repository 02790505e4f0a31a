"""Post-processing helpers for time series written by the harness."""
from __future__ import annotations

import numpy as np


def detrend(x: np.ndarray) -> np.ndarray:
    """Remove the least-squares straight line."""
    x = np.asarray(x, dtype=float)
    k = np.arange(len(x), dtype=float)
    slope, intercept = np.polyfit(k, x, 1)
    return x - (slope * k + intercept)


def cross_correlation_lag(x, y, dt: float, max_lag: float) -> float:
    """Delay of ``y`` relative to ``x`` maximising their correlation.

    Both series are detrended first. A positive result means ``y`` follows
    ``x``. The search covers ``|lag| <= max_lag``.
    """
    x, y = detrend(x), detrend(y)
    if len(x) != len(y):
        raise ValueError("series lengths differ")
    m = int(round(max_lag / dt))
    if not 0 < m < len(x):
        raise ValueError("max_lag must span between one sample and the series length")
    best, best_lag = -np.inf, 0
    for lag in range(-m, m + 1):
        if lag >= 0:
            a, b = x[: len(x) - lag], y[lag:]
        else:
            a, b = x[-lag:], y[: len(y) + lag]
        c = np.dot(a, b) / len(a)
        if c > best:
            best, best_lag = c, lag
    return best_lag * dt


def long_time_mean(times, values, period: float, periods: int = 5) -> float:
    """Mean over the final ``periods`` periods of a uniformly sampled series."""
    dt = times[1] - times[0]
    k = int(round(periods * period / dt))
    if len(values) < k + 1:
        raise ValueError("series shorter than the averaging window")
    return float(np.mean(values[len(values) - 1 - k : len(values) - 1]))
