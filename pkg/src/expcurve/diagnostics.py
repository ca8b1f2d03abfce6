"""Distributional validation of normalized errors.

Empirical CDFs against a normal or Student reference, probability integral
transforms against the uniform, Kolmogorov-Smirnov distances, and the two
cross-sectional consistency checks: the identity between the experience
exponent and the ratio of cost drift to experience growth, and the
smoothing law linking experience volatility to production drift/volatility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def _reference_dist(reference: str, df=None):
    if reference == "normal":
        return stats.norm
    if reference == "student":
        if df is None or df < 1:
            raise ValueError("student reference needs df >= 1")
        return stats.t(df)
    raise ValueError(f"unknown reference '{reference}'")


@dataclass(frozen=True)
class DistCheck:
    """Sorted sample with reference CDF values and the KS distance."""

    sample: np.ndarray
    reference: str
    df: float | None
    ref_cdf: np.ndarray
    ks_stat: float

    @property
    def pit_values(self) -> np.ndarray:
        return self.ref_cdf

    @property
    def ecdf(self) -> np.ndarray:
        n = len(self.sample)
        return np.arange(1, n + 1) / n


def ks_statistic(sorted_sample: np.ndarray, cdf_values: np.ndarray) -> float:
    """Sup distance between the empirical CDF of a sorted sample and a
    reference CDF evaluated at the sample points."""
    n = len(sorted_sample)
    grid_hi = np.arange(1, n + 1) / n
    grid_lo = np.arange(0, n) / n
    return float(max(np.max(grid_hi - cdf_values), np.max(cdf_values - grid_lo)))


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic KS acceptance threshold at level ``alpha``."""
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)


def ecdf_vs_reference(sample, reference: str = "normal", df=None) -> DistCheck:
    """Compare a sample against a reference distribution.

    Returns the sorted sample, the reference CDF on it, and the exact KS
    statistic. Needs at least two observations.
    """
    s = np.sort(np.asarray(sample, dtype=float))
    if len(s) < 2:
        raise ValueError("need at least 2 observations")
    if not np.all(np.isfinite(s)):
        raise ValueError("sample contains non-finite values")
    dist = _reference_dist(reference, df)
    cdf = dist.cdf(s)
    return DistCheck(
        sample=s,
        reference=reference,
        df=df,
        ref_cdf=cdf,
        ks_stat=ks_statistic(s, cdf),
    )


def pit(sample, reference: str = "normal", df=None) -> np.ndarray:
    """Probability integral transform: the reference CDF applied elementwise.

    Uniform output means the sample is distributed as the reference; excess
    mass in the outer deciles means the sample's tails are heavier.
    """
    s = np.asarray(sample, dtype=float)
    if s.size < 2:
        raise ValueError("need at least 2 observations")
    return _reference_dist(reference, df).cdf(s)


def sahal_check(entries) -> np.ndarray:
    """Exponent identity scatter data.

    For each ``(mu, r, omega)`` triple returns
    ``(omega, mu / r, omega - mu / r)``. When both cost and experience trends
    are exponential, the first two coincide.
    """
    rows = []
    for mu, r, omega in entries:
        if r == 0.0:
            raise ValueError("r must be non-zero")
        ratio = mu / r
        rows.append((omega, ratio, omega - ratio))
    if not rows:
        raise ValueError("empty entry list")
    return np.asarray(rows, dtype=float)


def tanh_check(stats_list) -> np.ndarray:
    """Observed vs predicted experience volatility, with drift pairs.

    For each :class:`~expcurve.series.GrowthStats` returns
    ``(sigma_x_observed, sigma_x_predicted, r, g)`` where the prediction is
    ``sigma_q * sqrt(tanh(g / 2))``. Requires ``g > 0`` per entry.
    """
    from .surrogate import sigma_x_theory  # deferred: surrogate imports this module

    rows = []
    for gs in stats_list:
        _, var_pred = sigma_x_theory(gs.g, gs.sigma_q)
        rows.append((gs.sigma_x, math.sqrt(var_pred), gs.r, gs.g))
    if not rows:
        raise ValueError("empty statistics list")
    return np.asarray(rows, dtype=float)
