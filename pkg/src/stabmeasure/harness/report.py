"""Convergence reports and their CSV / JSON serialisation."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

COLUMNS = ["experiment", "d", "n", "k", "statistic", "mean", "std", "reps",
           "target", "abs_err", "rel_err", "seed"]
_FLOAT_COLS = {"mean", "std", "target", "abs_err", "rel_err"}
_INT_COLS = {"d", "n", "k", "reps", "seed"}


class ReportIOError(OSError):
    pass


@dataclass(frozen=True)
class ReportRow:
    experiment: str
    d: int
    n: int
    k: int
    statistic: str
    mean: float
    std: float
    reps: int
    target: Optional[float]
    abs_err: Optional[float]
    rel_err: Optional[float]
    seed: int

    @classmethod
    def from_values(cls, experiment: str, d: int, n: int, k: int, statistic: str,
                    values, target: Optional[float], seed: int) -> "ReportRow":
        v = np.asarray(values, dtype=float)
        mean = float(np.mean(v))
        std = float(np.std(v, ddof=1)) if len(v) > 1 else 0.0
        abs_err = rel_err = None
        if target is not None:
            abs_err = abs(mean - target)
            rel_err = abs_err / abs(target) if target != 0 else None
        return cls(experiment, d, n, k, statistic, mean, std, len(v), target, abs_err, rel_err, seed)


@dataclass
class ConvergenceReport:
    rows: List[ReportRow] = field(default_factory=list)

    def add(self, row: ReportRow) -> None:
        self.rows.append(row)

    def merge(self, other: "ConvergenceReport") -> "ConvergenceReport":
        return ConvergenceReport(sorted(self.rows + other.rows, key=_row_key))

    def select(self, statistic: str, k: Optional[int] = None) -> List[ReportRow]:
        return [r for r in self.rows if r.statistic == statistic and (k is None or r.k == k)]

    def __len__(self) -> int:
        return len(self.rows)


def _row_key(r: ReportRow):
    return (r.experiment, r.n, r.k, r.statistic)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def to_csv(report: ConvergenceReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in report.rows:
        w.writerow([_fmt(getattr(r, c)) for c in COLUMNS])
    return buf.getvalue()


def to_json(report: ConvergenceReport) -> str:
    return json.dumps([asdict(r) for r in report.rows], indent=1) + "\n"


def emit(report: ConvergenceReport, fmt: str, path) -> None:
    """Write the report as ``csv`` or ``json``; I/O errors name the path."""
    if fmt == "csv":
        text = to_csv(report)
    elif fmt == "json":
        text = to_json(report)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ReportIOError(f"cannot write report to {path}: {exc.strerror or exc}") from exc


def _parse_cell(col: str, s: str):
    if col in _FLOAT_COLS:
        return None if s == "" else float(s)
    if col in _INT_COLS:
        return int(s)
    return s


def parse_csv(text: str) -> ConvergenceReport:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != COLUMNS:
        raise ValueError(f"unexpected header {header}")
    rows = [ReportRow(**{c: _parse_cell(c, s) for c, s in zip(COLUMNS, rec)}) for rec in reader if rec]
    return ConvergenceReport(rows)


def parse_json(text: str) -> ConvergenceReport:
    return ConvergenceReport([ReportRow(**obj) for obj in json.loads(text)])


def load(path) -> ConvergenceReport:
    path = Path(path)
    text = path.read_text()
    return parse_json(text) if path.suffix == ".json" else parse_csv(text)
