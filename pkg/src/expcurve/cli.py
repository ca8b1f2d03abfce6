"""Command-line surface.

Subcommands: ``estimate`` (parameter table from a cost/production CSV),
``hindcast`` (rolling-origin errors), ``diagnose`` (distribution checks on a
hindcast CSV), ``simulate`` (synthetic datasets, ensemble bands, calibration
studies), ``forecast`` (distributional forecasts for one technology).

Every run writes its outputs atomically (temp file, then rename) plus a
``<command>_manifest.txt`` recording the normalized options, the seed, the
package version, and a SHA-256 of each input file. The manifest excludes the thread
count because outputs never depend on it: identical manifests mean
bit-identical outputs. All floats are serialized with 17 significant digits,
so piping one command's CSV into the next loses no precision.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diagnostics import ecdf_vs_reference, ks_critical_value, sahal_check, tanh_check
from .estimators import MooreParams, WrightParams, full_sample_estimates
from .forecast import (
    BAND_MULTIPLIERS,
    compare_forecasts,
    constant_growth_series,
    forecast_moore,
    forecast_wright,
)
from .hindcast import (
    HindcastConfig,
    mse_by_horizon,
    read_errors_csv,
    run_hindcast,
    write_errors_csv,
)
from .params_io import read_params_csv, reference_params_path, write_params_csv
from .series import DataError, GrowthStats, _fmt, build_experience, ingest_csv, write_csv
from .surrogate import SurrogateSpec, make_dataset, run_calibration_study, run_ensemble


def _atomic(path: Path, writer) -> None:
    tmp = path.with_name(path.name + ".tmp")
    writer(tmp)
    os.replace(tmp, path)


def _write_text(path: Path, text: str) -> None:
    _atomic(path, lambda p: Path(p).write_text(text, encoding="utf-8"))


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir: Path, command: str, options: dict, seed, inputs: dict) -> None:
    lines = [f"command={command}", f"seed={seed}", f"version={__version__}"]
    for key in sorted(options):
        lines.append(f"option.{key}={options[key]}")
    for name in sorted(inputs):
        lines.append(f"input.{name}.sha256={_sha256(inputs[name])}")
    _write_text(outdir / f"{command}_manifest.txt", "\n".join(lines) + "\n")


def _outdir(args) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ----------------------------------------------------------------- estimate


def cmd_estimate(args) -> int:
    outdir = _outdir(args)
    dataset = [build_experience(ts) for ts in ingest_csv(args.input)]
    rows = [full_sample_estimates(ts) for ts in dataset]
    _atomic(outdir / "params.csv", lambda p: write_params_csv(p, rows))
    if args.emit_series:
        _atomic(outdir / "series.csv", lambda p: write_csv(p, dataset))
    _write_manifest(
        outdir,
        "estimate",
        {"emit_series": args.emit_series},
        args.seed,
        {"data": args.input},
    )
    print(f"wrote {outdir / 'params.csv'} ({len(rows)} technologies)")
    return 0


# ----------------------------------------------------------------- hindcast


def cmd_hindcast(args) -> int:
    outdir = _outdir(args)
    cfg = HindcastConfig(m=args.m, tau_max=args.tau_max, rho=args.rho_star)
    dataset = [build_experience(ts) for ts in ingest_csv(args.input)]
    errors = run_hindcast(dataset, cfg, threads=args.threads)
    _atomic(outdir / "errors.csv", lambda p: write_errors_csv(p, errors))
    _write_manifest(
        outdir,
        "hindcast",
        {"m": cfg.m, "tau_max": cfg.tau_max, "rho_star": cfg.rho},
        args.seed,
        {"data": args.input},
    )
    print(f"wrote {outdir / 'errors.csv'} ({len(errors)} errors)")
    return 0


# ----------------------------------------------------------------- diagnose


def _recovered_m(errors) -> int:
    counts: dict[int, int] = {}
    for rec in errors:
        m = round(rec.tau * rec.tau / (rec.A - rec.tau))
        counts[m] = counts.get(m, 0) + 1
    return max(counts, key=lambda k: (counts[k], -k))


def cmd_diagnose(args) -> int:
    outdir = _outdir(args)
    errors = read_errors_csv(args.errors)
    if not errors:
        raise DataError("error CSV has no rows")
    m = _recovered_m(errors)
    df = m - 1 if args.reference == "student" else None

    summary = [f"reference={args.reference}", f"df={df}", f"window_m={m}"]
    ecdf_rows, pit_rows = [], []
    for model in ("moore", "wright"):
        vals = np.array(
            [rec.pooled_error for rec in errors if rec.model == model], dtype=float
        )
        finite = vals[np.isfinite(vals)]
        dropped = len(vals) - len(finite)
        if len(finite) < 2:
            summary.append(f"{model}: too few errors (n={len(finite)})")
            continue
        check = ecdf_vs_reference(finite, args.reference, df=df)
        for v, e, rc in zip(check.sample, check.ecdf, check.ref_cdf):
            ecdf_rows.append([model, _fmt(v), _fmt(e), _fmt(rc)])
        for p in check.pit_values:
            pit_rows.append([model, _fmt(p)])
        summary.append(
            f"{model}: n={len(finite)} dropped_nan={dropped} "
            f"ks={check.ks_stat:.6f} ks_critical_1pct={ks_critical_value(len(finite)):.6f}"
        )
    _write_text(outdir / "ecdf.csv", _csv_text(["model", "value", "ecdf", "ref_cdf"], ecdf_rows))
    _write_text(outdir / "pit.csv", _csv_text(["model", "pit"], pit_rows))

    inputs = {"errors": args.errors}
    if args.params:
        inputs["params"] = args.params
        rows = read_params_csv(args.params)
        sahal = sahal_check([(r["mu"], r["r"], r["omega"]) for r in rows])
        sahal_rows = [
            [rows[i]["technology"], _fmt(sahal[i, 0]), _fmt(sahal[i, 1]), _fmt(sahal[i, 2])]
            for i in range(len(rows))
        ]
        _write_text(
            outdir / "sahal.csv",
            _csv_text(["technology", "omega", "mu_over_r", "residual"], sahal_rows),
        )
        growing = [r for r in rows if r["g"] > 0]
        skipped = len(rows) - len(growing)
        stats_list = [
            GrowthStats(g=r["g"], sigma_q=r["sigma_q"], r=r["r"], sigma_x=r["sigma_x"], g_d=r["g"])
            for r in growing
        ]
        pairs = tanh_check(stats_list)
        tanh_rows = [
            [
                growing[i]["technology"],
                _fmt(growing[i]["g"]),
                _fmt(growing[i]["sigma_q"]),
                _fmt(pairs[i, 2]),
                _fmt(pairs[i, 0]),
                _fmt(pairs[i, 1]),
            ]
            for i in range(len(growing))
        ]
        _write_text(
            outdir / "tanh.csv",
            _csv_text(
                ["technology", "g", "sigma_q", "r", "sigma_x_observed", "sigma_x_theory"],
                tanh_rows,
            ),
        )
        summary.append(f"sahal: n={len(rows)}")
        summary.append(f"tanh: n={len(growing)} skipped_nonpositive_growth={skipped}")

    _write_text(outdir / "summary.txt", "\n".join(summary) + "\n")
    _write_manifest(
        outdir, "diagnose", {"reference": args.reference}, args.seed, inputs
    )
    print(f"wrote diagnostics to {outdir}")
    return 0


# ----------------------------------------------------------------- simulate


def _band_rows(grid, result):
    return [
        [_fmt(float(g)), _fmt(mu), _fmt(lo), _fmt(hi)]
        for g, mu, lo, hi in zip(grid, result.mean, result.lower, result.upper)
    ]


def cmd_simulate(args) -> int:
    outdir = _outdir(args)
    inputs = {}
    if args.calibration:
        result = run_calibration_study(
            m=args.m,
            variance=args.variance,
            iid_windows=args.iid_windows,
            n_tech=args.n_tech,
            periods=args.periods,
            seed=args.seed,
        )
        check = result.check
        ecdf_rows = [
            [_fmt(v), _fmt(e), _fmt(rc)]
            for v, e, rc in zip(check.sample, check.ecdf, check.ref_cdf)
        ]
        _write_text(
            outdir / "calibration_ecdf.csv",
            _csv_text(["value", "ecdf", "ref_cdf"], ecdf_rows),
        )
        _write_text(
            outdir / "calibration_pit.csv",
            _csv_text(["pit"], [[_fmt(p)] for p in result.pit_values]),
        )
        _write_text(
            outdir / "summary.txt",
            f"n={len(result.normalized)}\nreference={result.reference}\n"
            f"df={result.df}\nks={result.ks_stat:.6f}\n"
            f"ks_critical_1pct={ks_critical_value(len(result.normalized)):.6f}\n",
        )
        _write_manifest(
            outdir,
            "simulate",
            {
                "calibration": True,
                "m": args.m,
                "variance": args.variance,
                "iid_windows": args.iid_windows,
                "n_tech": args.n_tech,
                "periods": args.periods,
            },
            args.seed,
            inputs,
        )
        print(f"wrote calibration study to {outdir} (ks={result.ks_stat:.4f})")
        return 0

    if args.mimic:
        rows = read_params_csv(args.mimic)
        inputs["mimic"] = args.mimic
        spec = SurrogateSpec(
            n_tech=len(rows),
            T=np.array([r["T"] for r in rows]),
            g=np.array([r["g"] for r in rows]),
            sigma_q=np.array([r["sigma_q"] for r in rows]),
            omega=np.array([r["omega"] for r in rows]),
            sigma_eta=np.array([r["sigma_eta"] for r in rows]),
            rho=args.rho_star,
            seed=args.seed,
            n_ensembles=max(args.ensembles, 1),
            shared_production=args.shared_production,
            corrected_experience=not args.no_correction,
        )
    else:
        spec = SurrogateSpec(
            n_tech=args.n_tech,
            T=args.periods,
            g=args.g,
            sigma_q=args.sigma_q,
            omega=args.omega,
            sigma_eta=args.sigma_eta,
            rho=args.rho,
            seed=args.seed,
            n_ensembles=max(args.ensembles, 1),
            shared_production=args.shared_production,
            corrected_experience=not args.no_correction,
        )

    _atomic(outdir / "dataset.csv", lambda p: write_csv(p, make_dataset(spec, 0)))

    if args.ensembles > 0:
        cfg = HindcastConfig(m=args.m, tau_max=args.tau_max, rho=args.rho_star)
        taus = np.arange(1, args.tau_max + 1)

        def stat(dataset):
            errs = run_hindcast(dataset, cfg)
            out = np.full(2 * len(taus), np.nan)
            for k, model in enumerate(("moore", "wright")):
                table = mse_by_horizon([e for e in errs if e.model == model])
                for i, tau in enumerate(taus):
                    if int(tau) in table:
                        out[k * len(taus) + i] = table[int(tau)][0]
            return out

        result = run_ensemble(spec, stat, threads=args.threads)
        half = len(taus)
        for k, model in enumerate(("moore", "wright")):
            sub = slice(k * half, (k + 1) * half)
            rows = [
                [_fmt(float(t)), _fmt(result.mean[sub][i]), _fmt(result.lower[sub][i]), _fmt(result.upper[sub][i])]
                for i, t in enumerate(taus)
            ]
            _write_text(
                outdir / f"bands_{model}.csv",
                _csv_text(["grid", "stat_mean", "lo", "hi"], rows),
            )

    _write_manifest(
        outdir,
        "simulate",
        {
            "calibration": False,
            "mimic": bool(args.mimic),
            "n_tech": spec.n_tech,
            "periods": args.periods if not args.mimic else "per-technology",
            "g": args.g,
            "sigma_q": args.sigma_q,
            "omega": args.omega,
            "sigma_eta": args.sigma_eta,
            "rho": args.rho,
            "rho_star": args.rho_star,
            "ensembles": args.ensembles,
            "m": args.m,
            "tau_max": args.tau_max,
            "shared_production": args.shared_production,
            "no_correction": args.no_correction,
        },
        args.seed,
        inputs,
    )
    print(f"wrote surrogate outputs to {outdir}")
    return 0


# ----------------------------------------------------------------- forecast


def _forecast_rows(fc) -> list[list[str]]:
    rows = []
    bands = {k: fc.band(k) for k in BAND_MULTIPLIERS}
    lo2, hi2 = fc.level_band(2.0)
    for i, tau in enumerate(fc.horizons):
        row = [
            int(fc.years[i]),
            _fmt(fc.mean_log_cost[i]),
            _fmt(fc.var_exact[i]),
            _fmt(fc.var_simple[i]),
            _fmt(bands[2.0][0][i]),
            _fmt(bands[1.0][0][i]),
            _fmt(bands[1.0][1][i]),
            _fmt(bands[2.0][1][i]),
            _fmt(fc.mean_cost_level[i]),
            int(tau),
            _fmt(bands[1.5][0][i]),
            _fmt(bands[1.5][1][i]),
            _fmt(lo2[i]),
            _fmt(hi2[i]),
        ]
        rows.append(row)
    return rows


_FORECAST_HEADER = [
    "year",
    "mean_log_cost",
    "var_exact",
    "var_simple",
    "lo_2sd",
    "lo_1sd",
    "hi_1sd",
    "hi_2sd",
    "mean_cost_level",
    "tau",
    "lo_1_5sd",
    "hi_1_5sd",
    "lo_2sd_level",
    "hi_2sd_level",
]


def cmd_forecast(args) -> int:
    outdir = _outdir(args)
    inputs = {}
    if args.input:
        inputs["data"] = args.input
        dataset = {ts.name: ts for ts in ingest_csv(args.input)}
        if args.tech not in dataset:
            raise DataError(f"technology '{args.tech}' not found in {args.input}")
        series = build_experience(dataset[args.tech])
        est = full_sample_estimates(series)
    else:
        params_path = args.params if args.params else reference_params_path()
        if args.params:
            inputs["params"] = args.params
        rows = {r["technology"]: r for r in read_params_csv(params_path)}
        if args.tech not in rows:
            raise DataError(f"technology '{args.tech}' not found in parameter table")
        est = rows[args.tech]
        series = constant_growth_series(
            args.tech, T=est["T"], r=est["r"], mu=est["mu"]
        )
    m = est["T"] - 1
    wparams = WrightParams(omega=est["omega"], sigma_eta=est["sigma_eta"], m=m)
    mparams = MooreParams(mu=est["mu"], K=est["K"], m=m)
    fw = forecast_wright(
        series,
        wparams,
        horizons=args.horizon,
        future_x_growth=args.future_growth,
        rho_star=args.rho_star,
    )
    fm = forecast_moore(series, mparams, horizons=args.horizon, theta_star=args.theta_star)
    _write_text(outdir / "forecast_wright.csv", _csv_text(_FORECAST_HEADER, _forecast_rows(fw)))
    _write_text(outdir / "forecast_moore.csv", _csv_text(_FORECAST_HEADER, _forecast_rows(fm)))
    comp = compare_forecasts(fw, fm)
    comp_rows = [
        [int(t), _fmt(d), _fmt(w)] for t, d, w in comp
    ]
    _write_text(
        outdir / "comparison.csv",
        _csv_text(["tau", "mean_diff_wright_minus_moore", "band_width_ratio"], comp_rows),
    )
    _write_manifest(
        outdir,
        "forecast",
        {
            "tech": args.tech,
            "horizon": args.horizon,
            "future_growth": args.future_growth,
            "rho_star": args.rho_star,
            "theta_star": args.theta_star,
            "reference_params": not (args.input or args.params),
        },
        args.seed,
        inputs,
    )
    print(f"wrote forecasts to {outdir}")
    return 0


# ----------------------------------------------------------------- parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="expcurve",
        description="Experience-curve and time-trend cost forecasting toolkit.",
    )
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument(
        "--threads",
        type=int,
        default=os.cpu_count(),
        help="worker threads (outputs do not depend on this)",
    )
    parser.add_argument("--output-dir", default=".", help="directory for output files")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="whole-sample parameter table from a data CSV")
    p.add_argument("--input", required=True, help="CSV: technology,year,cost,production")
    p.add_argument(
        "--emit-series",
        action="store_true",
        help="also write the series with derived experience columns",
    )
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("hindcast", help="rolling-origin pseudo-forecast errors")
    p.add_argument("--input", required=True)
    p.add_argument("--m", type=int, default=5, help="window size in differences")
    p.add_argument("--tau-max", type=int, default=20, help="maximum forecast horizon")
    p.add_argument("--rho-star", type=float, default=0.19, help="pooled MA(1) coefficient")
    p.set_defaults(func=cmd_hindcast)

    p = sub.add_parser("diagnose", help="distribution checks on a hindcast error CSV")
    p.add_argument("--errors", required=True, help="errors.csv from the hindcast command")
    p.add_argument("--params", default=None, help="params.csv for the identity/volatility checks")
    p.add_argument("--reference", choices=("student", "normal"), default="student")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("simulate", help="synthetic datasets, bands, calibration studies")
    p.add_argument("--n-tech", type=int, default=200)
    p.add_argument("--periods", type=int, default=50)
    p.add_argument("--g", type=float, default=0.1)
    p.add_argument("--sigma-q", type=float, default=0.1)
    p.add_argument("--omega", type=float, default=-0.3)
    p.add_argument("--sigma-eta", type=float, default=0.1)
    p.add_argument("--rho", type=float, default=0.0, help="generator MA(1) coefficient")
    p.add_argument("--ensembles", type=int, default=1000)
    p.add_argument("--m", type=int, default=5)
    p.add_argument("--tau-max", type=int, default=20)
    p.add_argument("--rho-star", type=float, default=0.19)
    p.add_argument("--shared-production", action="store_true")
    p.add_argument(
        "--no-correction",
        action="store_true",
        help="plain cumulative production instead of the initial-stock correction",
    )
    p.add_argument("--mimic", default=None, help="params.csv whose rows set per-technology parameters")
    p.add_argument("--calibration", action="store_true", help="run the theory calibration study")
    p.add_argument("--variance", choices=("estimated", "true"), default="estimated")
    p.add_argument("--iid-windows", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("forecast", help="distributional forecast for one technology")
    p.add_argument("--input", default=None, help="data CSV (fits parameters on the full sample)")
    p.add_argument("--params", default=None, help="parameter table (uses a constant-growth anchor)")
    p.add_argument("--tech", required=True)
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--future-growth", type=float, default=None)
    p.add_argument("--rho-star", type=float, default=0.19)
    p.add_argument("--theta-star", type=float, default=0.23)
    p.set_defaults(func=cmd_forecast)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataError, ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
