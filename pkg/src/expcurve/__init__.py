"""Distributional technology-cost forecasts from experience curves.

First-difference experience-curve (cost vs cumulative production) and
time-trend (drifting random walk) models, closed-form forecast-error
variances, rolling-origin hindcast validation, surrogate-data confidence
bands, and distribution diagnostics.
"""

from .series import (
    DataError,
    DiffSeries,
    GrowthStats,
    TechSeries,
    build_experience,
    estimate_discrete_growth,
    growth_stats,
    ingest_csv,
    write_csv,
)
from .estimators import (
    MooreParams,
    WrightParams,
    fit_moore,
    fit_wright,
    fit_wright_ma1,
    full_sample_estimates,
    ma1_loglik,
    pool_rho,
)
from .variance import (
    a_factor,
    horizon_rescale,
    ma1_variance_approx,
    ma1_variance_constant_x,
    moore_normalize,
    moore_variance,
    normalize_error,
    window_error_weights,
    wright_ma1_variance,
    wright_variance,
    wright_variance_rewritten,
)
from .hindcast import (
    HindcastConfig,
    HindcastError,
    mse_by_horizon,
    pooled_errors,
    read_errors_csv,
    run_hindcast,
    write_errors_csv,
)
from .surrogate import (
    CalibrationResult,
    EnsembleResult,
    SurrogateSpec,
    gen_cost,
    gen_log_production,
    gen_production,
    make_dataset,
    run_calibration_study,
    run_ensemble,
    sigma_x_theory,
)
from .diagnostics import (
    DistCheck,
    ecdf_vs_reference,
    ks_critical_value,
    ks_statistic,
    pit,
    sahal_check,
    tanh_check,
)
from .forecast import (
    DistForecast,
    compare_forecasts,
    constant_growth_series,
    forecast_moore,
    forecast_wright,
)
from .params_io import load_reference_params, read_params_csv, write_params_csv

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DiffSeries",
    "GrowthStats",
    "TechSeries",
    "build_experience",
    "estimate_discrete_growth",
    "growth_stats",
    "ingest_csv",
    "write_csv",
    "MooreParams",
    "WrightParams",
    "fit_moore",
    "fit_wright",
    "fit_wright_ma1",
    "full_sample_estimates",
    "ma1_loglik",
    "pool_rho",
    "a_factor",
    "horizon_rescale",
    "ma1_variance_approx",
    "ma1_variance_constant_x",
    "moore_normalize",
    "moore_variance",
    "normalize_error",
    "window_error_weights",
    "wright_ma1_variance",
    "wright_variance",
    "wright_variance_rewritten",
    "HindcastConfig",
    "HindcastError",
    "mse_by_horizon",
    "pooled_errors",
    "read_errors_csv",
    "run_hindcast",
    "write_errors_csv",
    "CalibrationResult",
    "EnsembleResult",
    "SurrogateSpec",
    "gen_cost",
    "gen_log_production",
    "gen_production",
    "make_dataset",
    "run_calibration_study",
    "run_ensemble",
    "sigma_x_theory",
    "DistCheck",
    "ecdf_vs_reference",
    "ks_critical_value",
    "ks_statistic",
    "pit",
    "sahal_check",
    "tanh_check",
    "DistForecast",
    "compare_forecasts",
    "constant_growth_series",
    "forecast_moore",
    "forecast_wright",
    "load_reference_params",
    "read_params_csv",
    "write_params_csv",
    "__version__",
]
