"""CSV ingestion and artifact writing.

Files are UTF-8, comma separated, ``.`` decimal point, with at most one
header row.  A first row whose fields are not all numeric is taken as the
header.  Floats are written with 17 significant digits so they read back
exactly.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .errors import CsvParseError

MIN_ROWS = 8


def fmt(v):
    return format(float(v), ".17g")


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


@dataclass(frozen=True)
class CsvSeriesFile:
    path: Path
    column: Union[int, str, None] = None
    header: Optional[bool] = None  # None: detect

    def read(self, min_rows=MIN_ROWS) -> np.ndarray:
        return read_series(self.path, self.column, self.header, min_rows)


def read_series(path, column=None, header=None, min_rows=MIN_ROWS) -> np.ndarray:
    """Read one numeric column.

    ``column`` is a header name, a 0-based index (an ``int`` or a string of
    digits that is not a header name) or ``None`` for the last column.
    """
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [(i, r) for i, r in enumerate(csv.reader(fh), start=1) if any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError("file is empty", line=1)
    first_line, first = rows[0]
    if header is None:
        header = not all(_is_number(c.strip()) for c in first)
    names = [c.strip() for c in first] if header else None
    body = rows[1:] if header else rows
    width = len(first)

    if column is None:
        idx = width - 1
    elif names is not None and str(column) in names:
        idx = names.index(str(column))
    elif isinstance(column, int) or str(column).lstrip("-").isdigit():
        idx = int(column)
        if not -width <= idx < width:
            raise CsvParseError(f"column index {idx} out of range; file has {width} columns"
                                + (f": {', '.join(names)}" if names else ""))
        idx %= width
    else:
        available = ", ".join(names) if names else f"indices 0..{width - 1} (no header)"
        raise CsvParseError(f"column {column!r} not found; available columns: {available}")

    values = []
    for lineno, row in body:
        if idx >= len(row):
            raise CsvParseError(f"expected at least {idx + 1} fields, found {len(row)}", line=lineno)
        text = row[idx].strip()
        try:
            v = float(text)
        except ValueError:
            raise CsvParseError(f"cannot parse {text!r} as a number", line=lineno) from None
        if not math.isfinite(v):
            raise CsvParseError(f"non-finite value {text!r}", line=lineno)
        values.append(v)
    if len(values) < min_rows:
        line = body[-1][0] + 1 if body else first_line + 1
        raise CsvParseError(f"need at least {min_rows} data rows, found {len(values)}", line=line)
    return np.array(values)


def write_columns(path, columns):
    """Write ``{name: sequence}`` as CSV; integer columns stay integral."""
    names = list(columns)
    data = [np.asarray(columns[k]) for k in names]
    n = len(data[0])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names)
        for i in range(n):
            w.writerow([str(int(a[i])) if a.dtype.kind in "iu" else fmt(a[i]) for a in data])


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
