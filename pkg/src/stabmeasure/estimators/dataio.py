"""Delimited text ingestion of regression data.

One observation per row: d coordinate columns followed by the response.
An optional header row is allowed only as the first non-blank line; lines
starting with ``#`` are skipped.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..point_process import PointSet


class DataFormatError(ValueError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.path = path
        self.lineno = lineno


def _split(line: str, delimiter: Optional[str]) -> List[str]:
    if delimiter is None:
        return line.split()
    return [f.strip() for f in line.split(delimiter)]


def _sniff(line: str) -> Optional[str]:
    for cand in (",", "\t", ";"):
        if cand in line:
            return cand
    return None


def read_regression_data(path, delimiter: Optional[str] = "auto", d: Optional[int] = None) -> PointSet:
    """Parse a regression file into a PointSet whose marks are the responses.

    Raises :class:`DataFormatError` naming the offending line for ragged
    rows, non-numeric or non-finite fields, or a misplaced header.
    """
    path = Path(path)
    rows: List[List[float]] = []
    width = None if d is None else d + 1
    seen_data = False
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if delimiter == "auto":
                delimiter = _sniff(line)
            fields = _split(line, delimiter)
            try:
                vals = [float(x) for x in fields]
            except ValueError:
                if seen_data or rows:
                    raise DataFormatError(path, lineno, f"non-numeric field in {fields!r}") from None
                if width is not None and len(fields) != width:
                    raise DataFormatError(path, lineno, f"header has {len(fields)} columns, expected {width}")
                width = len(fields)
                seen_data = True
                continue
            seen_data = True
            if width is None:
                width = len(vals)
            if len(vals) != width:
                raise DataFormatError(path, lineno, f"expected {width} columns, found {len(vals)}")
            if not all(math.isfinite(v) for v in vals):
                raise DataFormatError(path, lineno, "non-finite value")
            rows.append(vals)
    if width is None or not rows:
        raise DataFormatError(path, 0, "no observations")
    if width < 2:
        raise DataFormatError(path, 0, "need at least one coordinate column and a response")
    arr = np.asarray(rows)
    return PointSet(arr[:, :-1], arr[:, -1])


def write_regression_data(path, data: PointSet, delimiter: str = ",", header: bool = True) -> None:
    if not data.is_marked:
        raise ValueError("data must carry responses as marks")
    with Path(path).open("w") as fh:
        if header:
            fh.write(delimiter.join([f"x{j + 1}" for j in range(data.d)] + ["y"]) + "\n")
        for loc, y in zip(data.locations, data.marks):
            fh.write(delimiter.join(f"{v:.17g}" for v in (*loc, y)) + "\n")
