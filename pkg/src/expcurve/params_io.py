"""Reading and writing parameter-estimate tables.

The table mirrors the ``estimate`` command output: one row per technology
with sample length, cost drift/scale, production and experience growth
statistics, the experience exponent with its residual scale, and the MA(1)
coefficient. A reference table for 51 published technology histories is
bundled for surrogate mimicry and forecasting examples.
"""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

from .series import _fmt

PARAM_COLUMNS = (
    "technology",
    "T",
    "mu",
    "K",
    "g",
    "sigma_q",
    "r",
    "sigma_x",
    "omega",
    "sigma_eta",
    "rho",
)


def read_params_csv(path) -> list[dict]:
    """Read a parameter table; numeric columns become floats (``T`` an int)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in PARAM_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"parameter CSV missing column(s): {', '.join(missing)}")
        for row in reader:
            parsed = {"technology": row["technology"], "T": int(row["T"])}
            for col in PARAM_COLUMNS[2:]:
                parsed[col] = float(row[col])
            rows.append(parsed)
    if not rows:
        raise ValueError("parameter CSV has no rows")
    return rows


def write_params_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PARAM_COLUMNS)
        for row in rows:
            writer.writerow(
                [row["technology"], int(row["T"])]
                + [_fmt(float(row[c])) for c in PARAM_COLUMNS[2:]]
            )


def reference_params_path() -> Path:
    """Path of the bundled 51-technology reference parameter table."""
    return Path(resources.files("expcurve").joinpath("data/reference_params.csv"))


def load_reference_params() -> list[dict]:
    """Load the bundled reference parameter table."""
    return read_params_csv(reference_params_path())
