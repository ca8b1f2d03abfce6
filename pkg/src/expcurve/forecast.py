"""Forward-looking distributional forecasts.

The point path extrapolates the fitted trend; the variance path comes from
the forecast-error theory with a pooled MA(1) coefficient. Two variance
paths are always reported: the exact one using the realized past experience
changes, and the constant-growth approximation, so the (usually small) gap
between them is visible. Quantile bands use normal multipliers, appropriate
for the long estimation samples these forecasts are built on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .estimators import MooreParams, WrightParams
from .series import TechSeries
from .variance import ma1_variance_approx, ma1_variance_constant_x, wright_ma1_variance

BAND_MULTIPLIERS = (1.0, 1.5, 2.0)


@dataclass(frozen=True)
class DistForecast:
    """Mean log-cost path with exact and simplified variance paths.

    Bands are symmetric about the mean in log space; level-space bands are
    their exponentials.
    """

    model: str
    base_year: int
    horizons: np.ndarray
    mean_log_cost: np.ndarray
    var_exact: np.ndarray
    var_simple: np.ndarray
    assumed_future_r: float | None = None

    @property
    def years(self) -> np.ndarray:
        return self.base_year + self.horizons

    def band(self, multiplier: float) -> tuple[np.ndarray, np.ndarray]:
        """Log-space band at ``mean -/+ multiplier * sd`` (exact variance)."""
        half = multiplier * np.sqrt(self.var_exact)
        return self.mean_log_cost - half, self.mean_log_cost + half

    def level_band(self, multiplier: float) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.band(multiplier)
        return np.exp(lo), np.exp(hi)

    @property
    def mean_cost_level(self) -> np.ndarray:
        return np.exp(self.mean_log_cost)


def _future_diffs(future_x_growth, horizons: int, fallback: float | None):
    if future_x_growth is None:
        if fallback is None:
            raise ValueError("no future experience growth available")
        future_x_growth = fallback
    if np.ndim(future_x_growth) == 0:
        r = float(future_x_growth)
        if r <= 0.0:
            raise ValueError("future experience growth must be positive")
        return np.full(horizons, r), r
    fut = np.asarray(future_x_growth, dtype=float)
    if len(fut) < horizons:
        raise ValueError(f"future growth series shorter than horizon ({len(fut)} < {horizons})")
    if np.any(fut[:horizons] <= 0.0):
        raise ValueError("future experience growth must be positive")
    return fut[:horizons], None


def forecast_wright(
    series: TechSeries,
    params: WrightParams,
    horizons: int,
    future_x_growth=None,
    rho_star: float = 0.19,
) -> DistForecast:
    """Experience-conditional distributional forecast.

    Future experience grows at ``future_x_growth`` per year (scalar or
    per-year series; defaults to the series' mean past growth, i.e. the past
    trend continued without variance). The exact variance uses the realized
    past experience changes; the simplified variance assumes they were
    constant.
    """
    if horizons < 1:
        raise ValueError("need at least one horizon")
    if params.sigma_eta < 0 or not math.isfinite(params.omega):
        raise ValueError("degenerate parameters")
    past_x = np.diff(series.log_experience)
    m = len(past_x)
    fut, r_assumed = _future_diffs(future_x_growth, horizons, float(past_x.mean()))
    taus = np.arange(1, horizons + 1)
    y_last = float(series.log_cost[-1])
    mean = y_last + params.omega * np.cumsum(fut)
    sigma_u = params.sigma_eta / math.sqrt(1.0 + rho_star * rho_star)
    var_exact = np.array(
        [wright_ma1_variance(sigma_u, rho_star, past_x, fut[:t]) for t in taus]
    )
    var_simple = ma1_variance_approx(params.sigma_eta, rho_star, taus, m)
    return DistForecast(
        model="wright",
        base_year=int(series.years[-1]),
        horizons=taus,
        mean_log_cost=mean,
        var_exact=var_exact,
        var_simple=np.asarray(var_simple),
        assumed_future_r=r_assumed,
    )


def forecast_moore(
    series: TechSeries,
    params: MooreParams,
    horizons: int,
    theta_star: float = 0.23,
) -> DistForecast:
    """Time-trend distributional forecast (unconditional on experience)."""
    if horizons < 1:
        raise ValueError("need at least one horizon")
    if params.K < 0 or not math.isfinite(params.mu):
        raise ValueError("degenerate parameters")
    m = series.T - 1
    taus = np.arange(1, horizons + 1)
    y_last = float(series.log_cost[-1])
    mean = y_last + params.mu * taus
    sigma_v = params.K / math.sqrt(1.0 + theta_star * theta_star)
    var_exact = np.asarray(ma1_variance_constant_x(sigma_v, theta_star, taus, m))
    var_simple = np.asarray(ma1_variance_approx(params.K, theta_star, taus, m))
    return DistForecast(
        model="moore",
        base_year=int(series.years[-1]),
        horizons=taus,
        mean_log_cost=mean,
        var_exact=var_exact,
        var_simple=var_simple,
    )


def compare_forecasts(a: DistForecast, b: DistForecast) -> np.ndarray:
    """Per-horizon mean difference and band-width ratio of two forecasts.

    Rows are ``(tau, mean_a - mean_b, width_a / width_b)`` where width is the
    log-space band width (proportional to the exact standard deviation).
    """
    if a.base_year != b.base_year:
        raise ValueError("forecasts anchored at different base years")
    if len(a.horizons) != len(b.horizons) or np.any(a.horizons != b.horizons):
        raise ValueError("forecasts on different horizon grids")
    ratio = np.sqrt(a.var_exact / b.var_exact)
    return np.column_stack([a.horizons, a.mean_log_cost - b.mean_log_cost, ratio])


def constant_growth_series(
    name: str,
    T: int,
    r: float,
    mu: float,
    base_year: int | None = None,
    y_last: float = 0.0,
) -> TechSeries:
    """Synthetic series with exactly constant log growth rates.

    Experience grows by ``r`` per year and log cost changes by ``mu``; the
    production column is the exact forward difference of experience, so the
    accumulation identity holds. Useful for forecasting from published
    parameter estimates when the underlying series is not available: slopes
    and band widths are meaningful, absolute levels are not.
    """
    if T < 3:
        raise ValueError("need T >= 3")
    if r <= 0.0:
        raise ValueError("experience growth must be positive")
    base_year = T if base_year is None else base_year
    t = np.arange(T)
    z = np.exp(r * t)
    q = z * (math.exp(r) - 1.0)
    y = y_last + mu * (t - (T - 1))
    return TechSeries(
        name=name,
        years=np.arange(base_year - T + 1, base_year + 1),
        cost=np.exp(y),
        production=q,
        experience=z,
    )
