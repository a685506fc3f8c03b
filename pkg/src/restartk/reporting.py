"""Flat-table serialization shared by the report types and the CLI.

Numbers are written with 17 significant digits and a '.' decimal point so a
rerun with the same config and seed produces byte-identical files.
"""

from __future__ import annotations

import json
import math


def fmt(value):
    """Locale-independent cell formatting."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if isinstance(value, (int,)):
        return str(value)
    return str(value)


def write_csv(path, columns, rows):
    with open(path, "w", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(value):
    if isinstance(value, float) and math.isnan(value):
        return None
    if hasattr(value, "tolist"):
        return value.tolist()
    return str(value)


def table_payload(task, columns, rows):
    """The JSON twin of a CSV table."""
    return {
        "task": task,
        "columns": list(columns),
        "rows": [[None if v is None else v for v in row] for row in rows],
    }
