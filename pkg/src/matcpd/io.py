"""Long-format CSV reading and writing for matrix series.

The format has a header ``t,i,j,x`` and one row per cell, with 1-based
time, row and column indices. Every (t, i, j) cell must appear exactly once.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .core import MatrixSeries, as_series, mad_scale
from .errors import ParseError, SchemaError

__all__ = ["HEADER", "ingest", "read_long_csv", "write_long_csv", "write_curves_csv"]

HEADER = ("t", "i", "j", "x")
MAX_REPORTED = 10


def _parse_index(text: str, name: str, lineno: int) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ParseError(f"line {lineno}: {name}={text!r} is not an integer") from None
    if v < 1:
        raise ParseError(f"line {lineno}: {name}={v} must be >= 1")
    return v


def read_long_csv(path) -> MatrixSeries:
    """Parse a long CSV into a series without any rescaling."""
    path = Path(path)
    keys = []
    values = []
    # newline="" lets the csv module handle both LF and CRLF
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip().lstrip("﻿") for h in header]
        if tuple(header) != HEADER:
            raise SchemaError(f"{path}: expected header {','.join(HEADER)}, got {','.join(header)}")
        for row in reader:
            lineno = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise ParseError(f"line {lineno}: expected 4 fields, got {len(row)}")
            t, i, j = (_parse_index(row[k].strip(), HEADER[k], lineno) for k in range(3))
            try:
                x = float(row[3])
            except ValueError:
                raise ParseError(f"line {lineno}: x={row[3]!r} is not a number") from None
            if not np.isfinite(x):
                raise ParseError(f"line {lineno}: x={row[3]!r} is not finite")
            keys.append((t, i, j))
            values.append(x)
    if not keys:
        raise SchemaError(f"{path}: no data rows")
    idx = np.asarray(keys, dtype=np.int64) - 1
    n_obs, p1, p2 = (idx.max(axis=0) + 1).tolist()
    data = np.zeros((n_obs, p1, p2))
    seen = np.zeros((n_obs, p1, p2), dtype=np.int64)
    np.add.at(seen, (idx[:, 0], idx[:, 1], idx[:, 2]), 1)
    if (seen > 1).any():
        dup = [f"(t={t + 1},i={i + 1},j={j + 1})" for t, i, j in np.argwhere(seen > 1)[:MAX_REPORTED]]
        raise SchemaError(f"{path}: duplicate cells {', '.join(dup)}")
    if (seen == 0).any():
        missing = np.argwhere(seen == 0)
        shown = [f"(t={t + 1},i={i + 1},j={j + 1})" for t, i, j in missing[:MAX_REPORTED]]
        raise SchemaError(f"{path}: {len(missing)} missing cells, first: {', '.join(shown)}")
    data[idx[:, 0], idx[:, 1], idx[:, 2]] = values
    return MatrixSeries(data)


def ingest(path, mad: bool = True, method: str = "median") -> tuple[MatrixSeries, np.ndarray]:
    """Load a long CSV and optionally apply per-component MAD rescaling.

    Returns
    -------
    series : MatrixSeries
    zero_scale : (p1, p2) bool array
        Components left unscaled because their MAD is zero. All False when
        ``mad`` is off.
    """
    x = read_long_csv(path)
    if not mad:
        return x, np.zeros((x.p1, x.p2), dtype=bool)
    return mad_scale(x, method=method)


def write_long_csv(x, path) -> None:
    """Write a series in long format; ``repr`` floats make the round trip exact."""
    x = as_series(x)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(HEADER) + "\n")
        for t in range(x.N):
            for i in range(x.p1):
                for j in range(x.p2):
                    fh.write(f"{t + 1},{i + 1},{j + 1},{float(x.data[t, i, j])!r}\n")


def write_curves_csv(curves: dict[str, np.ndarray], start: int, path) -> None:
    """Per-epoch CUSUM norm curves, one column per norm label."""
    labels = list(curves)
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["epoch", *labels]) + "\n")
        n = len(next(iter(curves.values()))) if labels else 0
        for k in range(n):
            row = [str(start + k)] + [repr(float(curves[lab][k])) for lab in labels]
            fh.write(",".join(row) + "\n")
