"""CSV and JSON emission of suite reports."""

from __future__ import annotations

import csv
import io
import json
import math
from importlib import resources
from pathlib import Path
from typing import Union

from .suite import SuiteReport

CSV_COLUMNS = ("theorem_id", "function_id", "g_function_id", "n", "lhs", "rhs", "margin",
               "passed", "x_worst", "grid_points")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _clean(obj):
    """Make floats JSON-safe (non-finite -> null) recursively."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def report_to_dict(report: SuiteReport) -> dict:
    return _clean({
        "metadata": report.metadata,
        "summary": report.summary(),
        "records": [r.to_dict() for r in report.records],
        "rate_fits": [a.to_dict() for a in report.rate_fits],
        "identity_checks": [c.to_dict() for c in report.identity_checks],
    })


def report_to_json(report: SuiteReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, allow_nan=False) + "\n"


def report_to_csv(report: SuiteReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in report.records:
        passed = "skipped" if r.status == "SKIPPED" else r.passed
        writer.writerow([_fmt(r.theorem_id), _fmt(r.function_id), _fmt(r.g_function_id), _fmt(r.n),
                         _fmt(r.lhs), _fmt(r.rhs), _fmt(r.margin), _fmt(passed),
                         _fmt(r.x_worst), _fmt(r.grid_points)])
    return buf.getvalue()


def emit_report(report: SuiteReport, fmt: str, path: Union[str, Path]) -> Path:
    """Write ``report`` as ``csv`` or ``json`` to ``path``."""
    fmt = fmt.lower()
    if fmt == "json":
        text = report_to_json(report)
    elif fmt == "csv":
        text = report_to_csv(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def report_schema() -> dict:
    text = resources.files("klab").joinpath("report_schema.json").read_text(encoding="utf-8")
    return json.loads(text)
