"""Delimited-matrix ingestion and the column-wise Welch batch.

Input matrices are rows = observations, columns = variables. Cells that
are empty or ``NA`` are recorded as missing; a column with any missing cell
is skipped by :func:`batch_welch` rather than tested on a subset.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import engines
from .errors import (
    DegenerateVariances,
    LabelMismatch,
    NonNumericCell,
    ParseError,
    RaggedRows,
)
from .sampling import as_rng, fork
from .statistics import TestResult

MISSING_TOKENS = frozenset({"", "NA", "NaN", "nan", "na"})
BATCH_METHODS = ("asymptotic", "naive", "efficient", "neto")
RESULT_COLUMNS = ("name", "statistic", "pvalue", "method", "resamples_effective", "flags")


@dataclass
class DataMatrix:
    values: np.ndarray
    column_names: Optional[list] = None
    row_names: Optional[list] = None

    @property
    def missing(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def shape(self):
        return self.values.shape


@dataclass
class GroupLabels:
    labels: np.ndarray  # 0 / 1 per row
    levels: tuple = ("0", "1")

    @classmethod
    def from_values(cls, values) -> "GroupLabels":
        raw = [str(v).strip() for v in values]
        levels = sorted(set(raw))
        if len(levels) != 2:
            raise LabelMismatch(f"expected exactly two distinct labels, got {levels}")
        codes = np.array([levels.index(v) for v in raw], dtype=np.int8)
        if min(np.count_nonzero(codes == 0), np.count_nonzero(codes == 1)) < 2:
            raise LabelMismatch("each group needs at least 2 observations")
        return cls(codes, tuple(levels))

    @classmethod
    def parse(cls, text: str) -> "GroupLabels":
        """Comma- or whitespace-separated inline labels."""
        return cls.from_values(text.replace(",", " ").split())

    @classmethod
    def read(cls, path) -> "GroupLabels":
        """One label per line; blank lines are ignored."""
        with open(path, encoding="utf-8") as fh:
            return cls.from_values(line for line in fh.read().splitlines() if line.strip())


def _parse_cell(text, row, col):
    token = text.strip()
    if token in MISSING_TOKENS:
        return math.nan
    try:
        value = float(token)
    except ValueError:
        raise NonNumericCell(f"non-numeric cell {token!r}", row, col) from None
    if not math.isfinite(value):
        raise NonNumericCell(f"non-finite cell {token!r}", row, col)
    return value


def _is_number(token):
    try:
        float(token)
    except ValueError:
        return False
    return True


def _sniff_delimiter(first_line):
    return "\t" if first_line.count("\t") > first_line.count(",") else ","


def load_matrix(path, delimiter=None, header=None, rownames=False) -> DataMatrix:
    """Parse a CSV/TSV file into a :class:`DataMatrix`.

    ``delimiter`` is detected from the first line when omitted. ``header``
    may be True, False, or None to treat the first line as a header when any
    of its data cells is non-numeric. With ``rownames`` the first column
    holds row labels.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not any(line.strip() for line in lines):
        raise ParseError("file is empty")
    if delimiter is None:
        delimiter = _sniff_delimiter(lines[0])
    rows = [r for r in csv.reader(lines, delimiter=delimiter) if r and any(c.strip() for c in r)]
    skip = 1 if rownames else 0
    if header is None:
        header = any(
            c.strip() not in MISSING_TOKENS and not _is_number(c) for c in rows[0][skip:]
        )
    column_names = None
    first = 0
    if header:
        column_names = [c.strip() for c in rows[0][skip:]]
        first = 1
    body = rows[first:]
    if not body:
        raise ParseError("no data rows")
    width = len(body[0])
    row_names = [] if rownames else None
    values = np.empty((len(body), width - skip))
    for i, row in enumerate(body):
        lineno = first + i + 1
        if len(row) != width:
            raise RaggedRows(f"expected {width} cells, found {len(row)}", lineno)
        if rownames:
            row_names.append(row[0].strip())
        for j, cell in enumerate(row[skip:]):
            values[i, j] = _parse_cell(cell, lineno, j + skip + 1)
    if column_names is not None and len(column_names) != values.shape[1]:
        raise RaggedRows(
            f"header has {len(column_names)} names for {values.shape[1]} columns", 1
        )
    return DataMatrix(values, column_names, row_names)


def synthetic_matrix(rows=40, cols=5000, rng=None, shift=0.0, n_case=None):
    """Null-by-default expression-like matrix plus balanced group labels.

    ``shift`` is added to the second group in every column.
    """
    g = as_rng(rng).generator
    values = g.standard_normal((rows, cols))
    n_case = rows // 2 if n_case is None else n_case
    labels = np.zeros(rows, dtype=np.int8)
    labels[n_case:] = 1
    values[labels == 1] += shift
    names = [f"col{j + 1}" for j in range(cols)]
    return DataMatrix(values, names), GroupLabels(labels)


def _column_result(column, labels, method, B, rng):
    if np.isnan(column).any():
        return TestResult(math.nan, math.nan, method, 0, ("skipped:missing",))
    a, b = column[labels == 0], column[labels == 1]
    try:
        return engines.ttest2(a, b, method, B, rng)
    except DegenerateVariances:
        # Zero spread in both groups: statistic 0, counted as null.
        resamples = 0 if method == "asymptotic" else (
            engines.ResamplePlan.from_requested(B).B_effective if method == "efficient" else B)
        return TestResult(0.0, 1.0, method, resamples, ("degenerate",))


def batch_welch(m: DataMatrix, g: GroupLabels, method="efficient", B=999, rng=None,
                threads=1) -> list:
    """Welch test on every column of ``m``.

    Column j uses sub-stream j of ``rng`` (by position), so results are the
    same for any thread count.
    """
    if method not in BATCH_METHODS:
        raise ValueError(f"method {method!r} is not available for batch Welch")
    labels = np.asarray(g.labels)
    if labels.shape[0] != m.values.shape[0]:
        raise LabelMismatch(
            f"{labels.shape[0]} labels for {m.values.shape[0]} rows"
        )
    cols = m.values.shape[1]
    streams = fork(as_rng(rng), cols)

    def work(j):
        return _column_result(m.values[:, j], labels, method, B, streams[j])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(cols)))
    return [work(j) for j in range(cols)]


def _fmt(value):
    if isinstance(value, float):
        return "NA" if math.isnan(value) else repr(value)
    return str(value)


def write_results(results, path, names=None):
    """TSV with one row per result; floats are written at full precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\t".join(RESULT_COLUMNS) + "\n")
        for i, r in enumerate(results):
            name = names[i] if names is not None else f"col{i + 1}"
            fields = (name, _fmt(float(r.statistic)), _fmt(float(r.pvalue)), r.method,
                      str(r.resamples_effective), ",".join(r.flags))
            fh.write("\t".join(fields) + "\n")


def read_results(path):
    """Inverse of :func:`write_results`: returns ``(names, results)``."""
    names, results = [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != RESULT_COLUMNS:
            raise ParseError(f"unexpected header {header}", 1)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(RESULT_COLUMNS):
                raise RaggedRows("wrong number of fields", lineno)
            name, stat, p, method, eff, flags = parts
            names.append(name)
            results.append(TestResult(
                math.nan if stat == "NA" else float(stat),
                math.nan if p == "NA" else float(p),
                method, int(eff), tuple(f for f in flags.split(",") if f),
            ))
    return names, results
