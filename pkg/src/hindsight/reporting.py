"""Report serialization and pair-file loading.

Two output formats. JSON is one self-contained document with sorted keys, so
serialization is canonical: parsing and re-serializing a report reproduces it
byte for byte. CSV mode writes one table per evaluation procedure with a
fixed column order, plus the config echo as a small JSON file so the CSV
bundle stays reproducible too.

All delimited output uses commas, '.' as the decimal point, LF line endings,
and UTF-8, independent of locale. Floats are written with repr, the shortest
form that round-trips.
"""

from __future__ import annotations

import csv
import json
import math
import os
from typing import TYPE_CHECKING

from .errors import DataError
from .market import DEFAULT_OUTCOME_CAP, ForecastOutcomePair

if TYPE_CHECKING:
    from .runner import ExperimentReport

__all__ = [
    "load_pairs",
    "report_to_dict",
    "render_json",
    "write_report",
    "FORWARD_COLUMNS",
    "BACKWARD_COLUMNS",
    "GLOBAL_COLUMNS",
]

PAIR_COLUMNS = ["item_id", "prediction", "outcome"]
FORWARD_COLUMNS = ["lo", "hi", "count", "mean_prediction", "mean_outcome", "stderr", "z", "flagged"]
BACKWARD_COLUMNS = ["outcome", "count", "mean_prediction", "stderr", "analytic_hindsight_mean"]
GLOBAL_COLUMNS = [
    "mean_prediction",
    "mean_outcome",
    "difference",
    "stderr",
    "z",
    "significant_at_3sigma",
    "degenerate",
    "calibration_passed",
    "calibration_z_crit",
    "overall_ok",
]


def load_pairs(path: str, outcome_cap: int = DEFAULT_OUTCOME_CAP) -> list[ForecastOutcomePair]:
    """Read prediction/outcome pairs from a CSV file, in file order.

    The header must be exactly ``item_id,prediction,outcome``; every data
    problem is reported with its 1-based line number.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    except FileNotFoundError:
        raise DataError(f"pairs file not found: {path}")
    except UnicodeDecodeError as exc:
        raise DataError(f"pairs file {path} is not valid UTF-8: {exc}")
    if not rows:
        raise DataError(f"pairs file {path} is empty")
    if rows[0] != PAIR_COLUMNS:
        raise DataError(
            f"pairs file {path} line 1: header must be "
            f"{','.join(PAIR_COLUMNS)!r}, got {','.join(rows[0])!r}"
        )
    pairs = []
    for line_num, row in enumerate(rows[1:], start=2):
        where = f"pairs file {path} line {line_num}"
        if len(row) != 3:
            raise DataError(f"{where}: expected 3 columns, got {len(row)}")
        raw_id, raw_pred, raw_out = row
        try:
            item_id = int(raw_id)
        except ValueError:
            raise DataError(f"{where}: item_id {raw_id!r} is not an integer")
        try:
            prediction = float(raw_pred)
        except ValueError:
            raise DataError(f"{where}: prediction {raw_pred!r} is not a number")
        if not (math.isfinite(prediction) and prediction >= 0):
            raise DataError(f"{where}: prediction must be finite and >= 0, got {raw_pred}")
        try:
            outcome = int(raw_out)
        except ValueError:
            raise DataError(f"{where}: outcome {raw_out!r} is not an integer")
        if outcome < 0:
            raise DataError(f"{where}: outcome must be >= 0, got {outcome}")
        if outcome > outcome_cap:
            raise DataError(f"{where}: outcome {outcome} exceeds the cap {outcome_cap}")
        pairs.append(ForecastOutcomePair(item_id=item_id, prediction=prediction, outcome=outcome))
    if not pairs:
        raise DataError(f"pairs file {path} has a header but no data rows")
    return pairs


def _bucket_dict(b) -> dict:
    return {
        "lo": b.lo,
        "hi": b.hi,
        "count": b.count,
        "mean_prediction": b.mean_prediction,
        "mean_outcome": b.mean_outcome,
        "stderr": b.outcome_stderr,
        "z": b.z_score,
        "flagged": b.flagged_low_count,
    }


def report_to_dict(report: "ExperimentReport") -> dict:
    worst = report.verdict.worst
    return {
        "config": report.config,
        "global": {
            "mean_prediction": report.bias.mean_prediction,
            "mean_outcome": report.bias.mean_outcome,
            "difference": report.bias.difference,
            "stderr": report.bias.stderr,
            "z": report.bias.z_score,
            "significant_at_3sigma": report.bias.significant_at_3sigma,
            "degenerate": report.bias.degenerate,
        },
        "forward_buckets": [_bucket_dict(b) for b in report.forward],
        "calibration": {
            "passed": report.verdict.passed,
            "z_crit": report.verdict.z_crit,
            "buckets_checked": report.verdict.buckets_checked,
            "worst_bucket": None if worst is None else _bucket_dict(worst),
        },
        "backward_groups": [
            {
                "outcome": g.outcome,
                "count": g.count,
                "mean_prediction": g.mean_prediction,
                "stderr": g.prediction_stderr,
                "analytic_hindsight_mean": g.analytic_hindsight_mean,
            }
            for g in report.backward
        ],
        "verdicts": {
            "global_bias_ok": report.global_bias_ok,
            "calibration_ok": report.calibration_ok,
            "overall_ok": report.overall_ok,
        },
        "metadata": report.metadata,
    }


def render_json(doc: dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def write_report(report: "ExperimentReport", out_dir: str, out_format: str) -> list[str]:
    """Write the report under out_dir; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    doc = report_to_dict(report)
    if out_format == "json":
        path = os.path.join(out_dir, "report.json")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_json(doc))
        return [path]
    if out_format != "csv":
        raise ValueError(f"unknown report format {out_format!r}")

    global_path = os.path.join(out_dir, "global.csv")
    g = doc["global"]
    _write_csv(
        global_path,
        GLOBAL_COLUMNS,
        [[
            g["mean_prediction"],
            g["mean_outcome"],
            g["difference"],
            g["stderr"],
            g["z"],
            g["significant_at_3sigma"],
            g["degenerate"],
            doc["calibration"]["passed"],
            doc["calibration"]["z_crit"],
            doc["verdicts"]["overall_ok"],
        ]],
    )

    forward_path = os.path.join(out_dir, "forward_buckets.csv")
    _write_csv(
        forward_path,
        FORWARD_COLUMNS,
        [[b[col] for col in FORWARD_COLUMNS] for b in doc["forward_buckets"]],
    )

    backward_path = os.path.join(out_dir, "backward_groups.csv")
    _write_csv(
        backward_path,
        BACKWARD_COLUMNS,
        [[g[col] for col in BACKWARD_COLUMNS] for g in doc["backward_groups"]],
    )

    echo_path = os.path.join(out_dir, "config_echo.json")
    with open(echo_path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_json({"config": doc["config"], "metadata": doc["metadata"]}))
    return [global_path, forward_path, backward_path, echo_path]
