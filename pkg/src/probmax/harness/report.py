"""CSV and JSON emission for experiment reports."""

from __future__ import annotations

import csv
import json
import math
import os

SUMMARY_COLUMNS = ("scheme", "a", "n", "K_projections", "samples", "median_error",
                   "mean_error", "se_error", "wall_ms")
TRAJECTORY_COLUMNS = ("scheme", "a", "n", "replication", "iteration", "samples_so_far", "error")


def fmt(v):
    """Shortest round-trip text for numbers; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "tolist"):
        return _jsonable(obj.tolist())
    return obj


def _write_csv(path, columns, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for rec in records:
            w.writerow([fmt(rec.get(c)) for c in columns])


def emit_report(report, out_dir):
    """Write ``summary.csv``, ``trajectories.csv`` and ``report.json``; return their paths."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "summary": os.path.join(out_dir, "summary.csv"),
        "trajectories": os.path.join(out_dir, "trajectories.csv"),
        "report": os.path.join(out_dir, "report.json"),
    }
    _write_csv(paths["summary"], SUMMARY_COLUMNS, report.aggregates)
    _write_csv(paths["trajectories"], TRAJECTORY_COLUMNS, report.trajectories)
    with open(paths["report"], "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(report.to_dict()), fh, indent=2, allow_nan=False)
        fh.write("\n")
    return paths


def read_summary(path):
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
