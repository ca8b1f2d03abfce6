"""Rolling-origin pseudo-forecasting.

Every stretch of ``m + 1`` observations (``m`` differences) that leaves at
least one later observation becomes an estimation window. Both models are
fit on the window, forecasts are made for every reachable horizon, and the
realized errors are recorded together with the per-window scale estimates
needed to normalize them. Origins advance one year at a time, so errors from
one technology overlap heavily; the surrogate-data machinery is the tool
that accounts for that downstream.

Future experience is always the realized series (costs are forecast
conditional on experience), and the experience-curve forecasts always use
the plain least-squares slope.
"""

from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .series import TechSeries, _fmt
from .variance import ma1_variance_constant_x

ERROR_COLUMNS = (
    "technology",
    "origin_year",
    "tau",
    "model",
    "raw_error",
    "K_hat",
    "sigma_eta_hat",
    "A",
    "normalized_error",
    "pooled_error",
)


@dataclass(frozen=True)
class HindcastConfig:
    """Window size ``m`` (differences), horizon cap, pooled MA(1) coefficient
    used in normalization, and the reference distribution for diagnostics.

    ``tau_max=None`` leaves horizons uncapped.
    """

    m: int = 5
    tau_max: int | None = 20
    rho: float = 0.19
    reference: str = "student"

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.tau_max is not None and self.tau_max < 1:
            raise ValueError("tau_max must be at least 1")
        if self.reference not in ("normal", "student"):
            raise ValueError("reference must be 'normal' or 'student'")


@dataclass(frozen=True, slots=True)
class HindcastError:
    """One pseudo-forecast error.

    ``raw_error`` is realized minus forecast log cost. ``normalized_error``
    divides by the window's random-walk scale ``K_hat`` for both models so
    the two are directly comparable; ``pooled_error`` additionally rescales
    so errors of different horizons can be aggregated (``/ sqrt(A)`` for the
    random walk, ``/ sqrt(constant-growth MA(1) variance)`` for the
    experience curve). ``wright_variance`` is the realized-experience MA(1)
    variance of this window/horizon. Records loaded from CSV carry ``None``
    for the fields the CSV format omits.
    """

    technology: str
    origin_year: int
    tau: int
    model: str
    raw_error: float
    K_hat: float
    sigma_eta_hat: float
    A: float
    normalized_error: float
    pooled_error: float
    origin_index: int | None = None
    moore_variance: float | None = None
    wright_variance: float | None = None


def _hindcast_one(ts: TechSeries, cfg: HindcastConfig) -> tuple[list[HindcastError], int]:
    m = cfg.m
    T = ts.T
    if T < m + 2:
        warnings.warn(
            f"{ts.name}: too short for m={m} (T={T}); skipped", stacklevel=3
        )
        return [], 0

    y = ts.log_cost
    dy = np.diff(y)
    dx = np.diff(ts.log_experience)
    rho = cfg.rho
    su_factor = 1.0 / (1.0 + rho * rho)
    records: list[HindcastError] = []
    zero_scale = 0

    for o in range(m, T - 1):
        yw = dy[o - m:o]
        xw = dx[o - m:o]
        sx2 = float(xw @ xw)
        omega = float(xw @ yw) / sx2
        resid = yw - omega * xw
        sig_eta2 = float(resid @ resid) / (m - 1)
        sig_eta = math.sqrt(sig_eta2)
        mu = float(yw.mean())
        k2 = float(yw.var(ddof=1))
        k_hat = math.sqrt(k2)

        reach = T - 1 - o
        n_tau = reach if cfg.tau_max is None else min(cfg.tau_max, reach)
        taus = np.arange(1, n_tau + 1)
        fsum = np.cumsum(dx[o:o + n_tau])
        actual = y[o + 1:o + n_tau + 1] - y[o]
        e_w = actual - omega * fsum
        e_m = actual - mu * taus
        a = taus + taus * taus / m

        # Realized-experience MA(1) variance, expanded so one window shares
        # the invariant pieces across horizons.
        su2 = sig_eta2 * su_factor
        c = fsum / sx2
        s1 = float(np.sum((xw[:-1] + rho * xw[1:]) ** 2))
        v_wright = su2 * (
            rho * rho * c * c * xw[0] * xw[0]
            + c * c * s1
            + (rho - c * xw[-1]) ** 2
            + (taus - 1) * (1.0 + rho) ** 2
            + 1.0
        )
        v_moore = k2 * a

        if k_hat > 0.0:
            norm_w = e_w / k_hat
            norm_m = e_m / k_hat
            pooled_m = e_m / (k_hat * np.sqrt(a))
        else:
            zero_scale += 1
            norm_w = np.full(n_tau, np.nan)
            norm_m = np.full(n_tau, np.nan)
            pooled_m = np.full(n_tau, np.nan)
        if sig_eta > 0.0:
            v_pool = ma1_variance_constant_x(math.sqrt(su2), rho, taus, m)
            pooled_w = e_w / np.sqrt(v_pool)
        else:
            pooled_w = np.full(n_tau, np.nan)

        origin_year = int(ts.years[o])
        for i, tau in enumerate(taus):
            tau = int(tau)
            records.append(
                HindcastError(
                    technology=ts.name,
                    origin_year=origin_year,
                    tau=tau,
                    model="moore",
                    raw_error=float(e_m[i]),
                    K_hat=k_hat,
                    sigma_eta_hat=sig_eta,
                    A=float(a[i]),
                    normalized_error=float(norm_m[i]),
                    pooled_error=float(pooled_m[i]),
                    origin_index=o,
                    moore_variance=float(v_moore[i]),
                    wright_variance=float(v_wright[i]),
                )
            )
            records.append(
                HindcastError(
                    technology=ts.name,
                    origin_year=origin_year,
                    tau=tau,
                    model="wright",
                    raw_error=float(e_w[i]),
                    K_hat=k_hat,
                    sigma_eta_hat=sig_eta,
                    A=float(a[i]),
                    normalized_error=float(norm_w[i]),
                    pooled_error=float(pooled_w[i]),
                    origin_index=o,
                    moore_variance=float(v_moore[i]),
                    wright_variance=float(v_wright[i]),
                )
            )
    return records, zero_scale


def run_hindcast(
    dataset: list[TechSeries],
    config: HindcastConfig | None = None,
    *,
    threads: int | None = None,
) -> list[HindcastError]:
    """Run the rolling-origin procedure over a dataset.

    Series too short for one window plus one forecast are skipped with a
    warning, not an error. Per-technology work is independent; with
    ``threads > 1`` it runs in a thread pool, and records are merged in
    dataset order either way, so output order never depends on scheduling.
    Record order is (technology, origin, horizon, model).
    """
    cfg = config or HindcastConfig()
    if threads is not None and threads > 1 and len(dataset) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda ts: _hindcast_one(ts, cfg), dataset))
    else:
        results = [_hindcast_one(ts, cfg) for ts in dataset]
    records: list[HindcastError] = []
    zero_scale = 0
    for recs, zs in results:
        records.extend(recs)
        zero_scale += zs
    if zero_scale:
        warnings.warn(
            f"{zero_scale} window(s) had zero residual scale; their normalized "
            "errors are recorded as nan",
            stacklevel=2,
        )
    return records


def _m_from_record(rec: HindcastError) -> int:
    # A = tau + tau^2/m  =>  m = tau^2 / (A - tau)
    return round(rec.tau * rec.tau / (rec.A - rec.tau))


def mse_by_horizon(
    errors: list[HindcastError], normalization: str = "moore"
) -> dict[int, tuple[float, int]]:
    """Mean squared normalized error and sample count per horizon.

    ``normalization`` selects the error field: ``"moore"`` for the
    scale-normalized error, ``"pooled"`` for the horizon-rescaled one.
    Non-finite entries (zero-scale windows) are dropped. Technologies with
    more windows weigh in more often; that is accepted.
    """
    if not errors:
        raise ValueError("empty error list")
    if normalization not in ("moore", "pooled"):
        raise ValueError("normalization must be 'moore' or 'pooled'")
    field = "normalized_error" if normalization == "moore" else "pooled_error"
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for rec in errors:
        val = getattr(rec, field)
        if not math.isfinite(val):
            continue
        sums[rec.tau] = sums.get(rec.tau, 0.0) + val * val
        counts[rec.tau] = counts.get(rec.tau, 0) + 1
    return {tau: (sums[tau] / counts[tau], counts[tau]) for tau in sorted(sums)}


def pooled_errors(
    errors: list[HindcastError], config: HindcastConfig | None = None
) -> np.ndarray:
    """Flat array of pooled errors, recomputed from the raw fields.

    Random-walk errors are divided by ``K_hat * sqrt(A)``; experience-curve
    errors by the square root of the constant-growth MA(1) variance at
    ``config.rho`` (which reduces to ``sigma_eta_hat * sqrt(A)`` when
    ``rho = 0``). Passing a config with a different ``rho`` re-pools an
    existing run without re-running it.
    """
    cfg = config or HindcastConfig()
    out = np.empty(len(errors))
    for i, rec in enumerate(errors):
        if rec.model == "moore":
            if rec.K_hat > 0.0:
                out[i] = rec.raw_error / (rec.K_hat * math.sqrt(rec.A))
            else:
                out[i] = np.nan
        else:
            if rec.sigma_eta_hat > 0.0:
                su = rec.sigma_eta_hat / math.sqrt(1.0 + cfg.rho * cfg.rho)
                v = ma1_variance_constant_x(su, cfg.rho, rec.tau, _m_from_record(rec))
                out[i] = rec.raw_error / math.sqrt(v)
            else:
                out[i] = np.nan
    return out


def write_errors_csv(path, errors: list[HindcastError]) -> None:
    """Write hindcast errors with 17 significant digits per value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ERROR_COLUMNS)
        for rec in errors:
            writer.writerow(
                [
                    rec.technology,
                    rec.origin_year,
                    rec.tau,
                    rec.model,
                    _fmt(rec.raw_error),
                    _fmt(rec.K_hat),
                    _fmt(rec.sigma_eta_hat),
                    _fmt(rec.A),
                    _fmt(rec.normalized_error),
                    _fmt(rec.pooled_error),
                ]
            )


def read_errors_csv(path) -> list[HindcastError]:
    """Read a hindcast error CSV back into records."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ERROR_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"error CSV missing column(s): {', '.join(missing)}")
        for row in reader:
            records.append(
                HindcastError(
                    technology=row["technology"],
                    origin_year=int(row["origin_year"]),
                    tau=int(row["tau"]),
                    model=row["model"],
                    raw_error=float(row["raw_error"]),
                    K_hat=float(row["K_hat"]),
                    sigma_eta_hat=float(row["sigma_eta_hat"]),
                    A=float(row["A"]),
                    normalized_error=float(row["normalized_error"]),
                    pooled_error=float(row["pooled_error"]),
                )
            )
    return records
