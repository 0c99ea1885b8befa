"""Report shapes shared by the service and the CLI.

Every metric subcommand emits {"metric", "value", ...extras, "per_item"?};
the summary combiner folds such reports into one table whose columns follow
the fixed order P, R, F1, BLEU, METEOR, PPL, MCE, MTE, P-FID, P-Acc, DCE.
Floats are serialized with Python's shortest round-trip repr, so identical
inputs yield byte-identical reports.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Iterable

from .errors import ValidationFailure

SUMMARY_COLUMNS = ("P", "R", "F1", "BLEU", "METEOR", "PPL", "MCE", "MTE", "P-FID", "P-Acc", "DCE")

_ALIASES = {
    "p": "P",
    "r": "R",
    "f1": "F1",
    "bleu": "BLEU",
    "meteor": "METEOR",
    "meteor_simplified": "METEOR",
    "ppl": "PPL",
    "perplexity": "PPL",
    "mce": "MCE",
    "mte": "MTE",
    "fid": "P-FID",
    "p-fid": "P-FID",
    "genre-acc": "P-Acc",
    "genre_accuracy": "P-Acc",
    "p-acc": "P-Acc",
    "dce": "DCE",
}


def canonical_metric_name(name: str) -> str:
    return _ALIASES.get(name.lower(), name)


def ordered_map(fn: Callable, items: Iterable, workers: int = 1) -> list:
    """Map fn over items preserving order, optionally on a thread pool.

    The merge is ordered, so the worker count can never change the output.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def format_float(value: float) -> str:
    return repr(float(value))


def report_to_json(report: dict) -> str:
    return json.dumps(report, ensure_ascii=False, indent=2) + "\n"


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def report_to_csv(report: dict) -> str:
    """Per-item CSV when the report carries items, metric/value row otherwise."""
    per_item = report.get("per_item")
    if per_item:
        keys = [k for k in per_item[0] if k != "id"]
        lines = ["id," + ",".join(keys)]
        for entry in per_item:
            lines.append(entry["id"] + "," + ",".join(_cell(entry[k]) for k in keys))
        return "\n".join(lines) + "\n"
    value = report.get("value")
    if isinstance(value, dict):
        lines = ["metric,value"]
        for name, v in value.items():
            lines.append(f"{name},{_cell(v)}")
        return "\n".join(lines) + "\n"
    extras = [k for k in report if k not in ("metric", "value", "per_item")]
    header = "metric,value" + ("," + ",".join(extras) if extras else "")
    row = f"{report['metric']},{_cell(value)}"
    if extras:
        row += "," + ",".join(_cell(report[k]) for k in extras)
    return header + "\n" + row + "\n"


def summarize_reports(reports: list[dict]) -> dict[str, float]:
    """Fold per-metric reports into one name -> value table.

    Composite reports (a dict-valued "value", e.g. P/R/F1) are flattened.
    Duplicate metric names are tolerated only when their values agree.
    """
    if not reports:
        raise ValidationFailure("summary needs at least one report")
    collected: dict[str, float] = {}

    def put(name: str, value: Any):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ValidationFailure(f"metric {name!r} has a non-numeric value")
        canonical = canonical_metric_name(name)
        if canonical in collected and collected[canonical] != float(value):
            raise ValidationFailure(
                f"conflicting duplicate metric {canonical!r}: "
                f"{collected[canonical]!r} vs {float(value)!r}"
            )
        collected[canonical] = float(value)

    for report in reports:
        if "metric" not in report or "value" not in report:
            raise ValidationFailure('summary inputs must carry "metric" and "value"')
        value = report["value"]
        if isinstance(value, dict):
            for name, v in value.items():
                put(name, v)
        else:
            put(report["metric"], value)

    ordered = {name: collected.pop(name) for name in SUMMARY_COLUMNS if name in collected}
    ordered.update({name: collected[name] for name in sorted(collected)})
    return ordered


def summary_to_json(table: dict[str, float]) -> str:
    return json.dumps({"metrics": table}, ensure_ascii=False, indent=2) + "\n"


def summary_to_csv(table: dict[str, float]) -> str:
    header = ",".join(table)
    row = ",".join(format_float(v) for v in table.values())
    return header + "\n" + row + "\n"


def correlation_to_csv(row_names: list[str], col_names: list[str], values) -> str:
    lines = ["metric," + ",".join(col_names)]
    for name, row in zip(row_names, values):
        lines.append(name + "," + ",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"
