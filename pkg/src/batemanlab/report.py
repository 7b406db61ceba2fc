"""Deterministic CSV/JSON writers shared by the CLI."""

import csv
import json
import math
from pathlib import Path


def fmt(value) -> str:
    """Floats with 17 significant digits; everything else via ``str``."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    if hasattr(value, "dtype") and value.dtype.kind == "f":
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows, preamble: str | None = None) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        if preamble:
            fh.write(preamble.rstrip("\n") + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
