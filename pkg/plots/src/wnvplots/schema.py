"""Reader and validator for the simulator's documented CSV schema.

Time-series files carry the exact column order

    t,algorithm,f_t,f_bar,p_inst_c1..cC,p_bar_run,Q_c1..cC,g_c1..cC,
    VO_c1..cC,RE,r_bar

for some cell count C >= 1. Sweep summaries carry

    axis,value,algorithm,f_bar,p_bar_run,r_bar,regret,max_violation,
    regret_bound,violation_bound,b_measured

This module never mutates inputs; it only reads.
"""

from __future__ import annotations

import csv
import math
import os
import re
from dataclasses import dataclass


class PlotInputError(Exception):
    """Missing or empty input file."""


class SchemaError(Exception):
    """A column is missing, renamed, or inconsistent."""


TIMESERIES_NAME = "timeseries.csv"
SWEEP_SUMMARY_NAME = "sweep_summary.csv"

_FIXED_PREFIX = ("t", "algorithm", "f_t", "f_bar")
_FIXED_SUFFIX = ("RE", "r_bar")
_SWEEP_COLUMNS = (
    "axis", "value", "algorithm", "f_bar", "p_bar_run", "r_bar", "regret",
    "max_violation", "regret_bound", "violation_bound", "b_measured",
)


@dataclass
class TimeSeries:
    path: str
    cells: int
    slots: list[int]
    algorithms: list[str]
    columns: dict  # (algorithm, column) -> list of floats


def _group(header: list[str], stem: str) -> int:
    """Count of consecutive per-cell columns ``<stem>_c1..cN``; validates numbering."""
    names = [h for h in header if re.fullmatch(rf"{stem}_c\d+", h)]
    expect = [f"{stem}_c{i + 1}" for i in range(len(names))]
    if not names or names != expect:
        raise SchemaError(f"per-cell column group {stem!r} is missing or misnumbered: {names}")
    return len(names)


def validate_timeseries_header(header: list[str], path: str) -> int:
    """Check the documented layout; returns the cell count."""
    for col in _FIXED_PREFIX + _FIXED_SUFFIX + ("p_bar_run",):
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")
    cells = _group(header, "p_inst")
    for stem in ("Q", "g", "VO"):
        if _group(header, stem) != cells:
            raise SchemaError(f"{path}: per-cell group {stem!r} disagrees with p_inst count")
    expected = list(_FIXED_PREFIX)
    expected += [f"p_inst_c{i + 1}" for i in range(cells)]
    expected += ["p_bar_run"]
    for stem in ("Q", "g", "VO"):
        expected += [f"{stem}_c{i + 1}" for i in range(cells)]
    expected += list(_FIXED_SUFFIX)
    if header != expected:
        extra = [h for h in header if h not in expected]
        missing = [h for h in expected if h not in header]
        raise SchemaError(
            f"{path}: column layout mismatch (unexpected {extra}, missing {missing})")
    return cells


def read_timeseries(path) -> TimeSeries:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise PlotInputError(f"missing input file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows) < 2:
        raise PlotInputError(f"empty input file: {path}")
    header = rows[0]
    cells = validate_timeseries_header(header, path)
    idx = {name: i for i, name in enumerate(header)}
    algorithms: list[str] = []
    columns: dict = {}
    slots: list[int] = []
    seen_slots = set()
    for row in rows[1:]:
        if len(row) != len(header):
            raise SchemaError(f"{path}: row has {len(row)} fields, header has {len(header)}")
        algo = row[idx["algorithm"]]
        if algo not in algorithms:
            algorithms.append(algo)
        t = int(row[idx["t"]])
        if t not in seen_slots:
            seen_slots.add(t)
            slots.append(t)
        for name in header:
            if name in ("t", "algorithm"):
                continue
            columns.setdefault((algo, name), []).append(float(row[idx[name]]))
    return TimeSeries(path=path, cells=cells, slots=sorted(slots),
                      algorithms=algorithms, columns=columns)


@dataclass
class SweepSummary:
    path: str
    axis: str
    rows: list[dict]


def read_sweep_summary(path) -> SweepSummary:
    path = os.fspath(path)
    if not os.path.exists(path):
        raise PlotInputError(f"missing input file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PlotInputError(f"empty input file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header = next(csv.reader(fh))
    for col in _SWEEP_COLUMNS:
        if col not in header:
            raise SchemaError(f"{path}: missing required column {col!r}")
    parsed = []
    for row in rows:
        parsed.append({
            "axis": row["axis"],
            "value": float(row["value"]),
            "algorithm": row["algorithm"],
            "f_bar": float(row["f_bar"]),
            "r_bar": float(row["r_bar"]),
        })
    axes = {r["axis"] for r in parsed}
    if len(axes) != 1:
        raise SchemaError(f"{path}: expected a single sweep axis, found {sorted(axes)}")
    return SweepSummary(path=path, axis=axes.pop(), rows=parsed)


def discover_runs(results_dir) -> list[tuple[str, str]]:
    """(label, timeseries path) pairs: the directory itself or its subdirectories."""
    results_dir = os.fspath(results_dir)
    found: list[tuple[str, str]] = []
    direct = os.path.join(results_dir, TIMESERIES_NAME)
    if os.path.exists(direct):
        found.append((os.path.basename(os.path.normpath(results_dir)), direct))
    if os.path.isdir(results_dir):
        for entry in sorted(os.listdir(results_dir)):
            candidate = os.path.join(results_dir, entry, TIMESERIES_NAME)
            if os.path.exists(candidate):
                found.append((entry, candidate))
    return found


def is_nan(x: float) -> bool:
    return isinstance(x, float) and math.isnan(x)
