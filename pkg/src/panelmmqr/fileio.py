"""Delimited-text readers and writers.

Files ending in ``.tsv`` are tab-separated, everything else comma-separated.
Numbers use ``.`` as radix; an empty field is a missing value.  Floats are
written with ``repr`` so a write/read cycle reproduces every bit.
"""

from __future__ import annotations

import csv
import math
import re
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from .errors import ParseError, SchemaError
from .panel import PanelDataset, QuarterId, quarter_range

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
KEY_COLUMNS = ("state", "year", "quarter")


def _delimiter(path: str | Path) -> str:
    return "\t" if str(path).lower().endswith(".tsv") else ","


def _number(text: str, path, line: int, column: str) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    if not _NUMBER.match(text):
        raise ParseError(f"column {column!r}: not a decimal number: {text!r}", str(path), line)
    return float(text)


def _integer(text: str, path, line: int, column: str) -> int:
    text = text.strip()
    if not re.fullmatch(r"[+-]?\d+", text):
        raise ParseError(f"column {column!r}: expected an integer, got {text!r}", str(path), line)
    return int(text)


def _read_rows(path, required: Sequence[str]) -> tuple[list[str], Iterable[tuple[int, dict]]]:
    fh = open(path, newline="", encoding="utf-8")
    lines = (ln for ln in fh if not ln.startswith("#"))
    reader = csv.DictReader(lines, delimiter=_delimiter(path))
    header = reader.fieldnames
    if header is None:
        fh.close()
        raise ParseError("file is empty", str(path), 1)
    header = [h.strip() for h in header]
    reader.fieldnames = header
    missing = [c for c in required if c not in header]
    if missing:
        fh.close()
        raise SchemaError(f"{path}: missing required column(s) {missing}")

    def rows():
        with fh:
            for rec in reader:
                line = reader.line_num
                if None in rec or any(v is None for v in rec.values()):
                    raise ParseError("wrong number of fields", str(path), line)
                yield line, rec

    return header, rows()


def read_panel(path: str | Path) -> PanelDataset:
    """Long-format panel: ``state, year, quarter`` plus one column per variable."""
    header, rows = _read_rows(path, KEY_COLUMNS)
    variables = [h for h in header if h not in KEY_COLUMNS]
    cells: dict[tuple[str, QuarterId], list[float]] = {}
    units: list[str] = []
    for line, rec in rows:
        unit = rec["state"].strip()
        if not unit:
            raise ParseError("empty state identifier", str(path), line)
        year = _integer(rec["year"], path, line, "year")
        qn = _integer(rec["quarter"], path, line, "quarter")
        if qn not in (1, 2, 3, 4):
            raise ParseError(f"quarter must be 1..4, got {qn}", str(path), line)
        q = QuarterId(year, qn)
        if (unit, q) in cells:
            raise ParseError(f"duplicate row for {unit} {q}", str(path), line)
        if unit not in units:
            units.append(unit)
        cells[(unit, q)] = [_number(rec[v], path, line, v) for v in variables]
    if not cells:
        raise SchemaError(f"{path}: no data rows")
    first = min(q for _, q in cells)
    last = max(q for _, q in cells)
    times = quarter_range(first, last.ordinal - first.ordinal + 1)
    data = np.full((len(variables), len(units), len(times)), np.nan)
    for i, u in enumerate(units):
        for t, q in enumerate(times):
            vals = cells.get((u, q))
            if vals is None:
                raise SchemaError(f"{path}: panel is not balanced; no row for {u} {q}")
            data[:, i, t] = vals
    for k, v in enumerate(variables):
        if np.isnan(data[k]).all():
            raise SchemaError(f"{path}: column {v!r} is empty")
    return PanelDataset(tuple(units), times, {v: data[k] for k, v in enumerate(variables)})


def read_monthly(path: str | Path) -> list[tuple[str, int, int, float]]:
    """Monthly 12-month inflation rates: ``state, year, month, rate``."""
    _, rows = _read_rows(path, ("state", "year", "month", "rate"))
    out = []
    for line, rec in rows:
        month = _integer(rec["month"], path, line, "month")
        if not 1 <= month <= 12:
            raise ParseError(f"month must be 1..12, got {month}", str(path), line)
        rate = _number(rec["rate"], path, line, "rate")
        if math.isnan(rate):
            raise ParseError("missing monthly rate", str(path), line)
        out.append((rec["state"].strip(), _integer(rec["year"], path, line, "year"), month, rate))
    return out


def read_forecast(path: str | Path) -> dict[QuarterId, float]:
    """One-year-ahead forecasts keyed by the quarter they were made: ``year, quarter, forecast``."""
    _, rows = _read_rows(path, ("year", "quarter", "forecast"))
    out: dict[QuarterId, float] = {}
    for line, rec in rows:
        qn = _integer(rec["quarter"], path, line, "quarter")
        if qn not in (1, 2, 3, 4):
            raise ParseError(f"quarter must be 1..4, got {qn}", str(path), line)
        q = QuarterId(_integer(rec["year"], path, line, "year"), qn)
        if q in out:
            raise ParseError(f"duplicate forecast for {q}", str(path), line)
        v = _number(rec["forecast"], path, line, "forecast")
        if not math.isnan(v):
            out[q] = v
    if not out:
        raise SchemaError(f"{path}: no forecasts")
    return out


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "yes" if value else "no"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        return "" if math.isnan(v) else repr(v)
    return str(value)


def write_table(
    path: str | Path,
    header: Sequence[str],
    rows: Iterable[Sequence],
    comments: Sequence[str] = (),
) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, delimiter=_delimiter(path), lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(v) for v in r])


def write_panel(path: str | Path, panel: PanelDataset) -> None:
    names = list(panel.series)
    grids = [panel[n] for n in names]

    def rows():
        for i, u in enumerate(panel.units):
            for t, q in enumerate(panel.times):
                yield [u, q.year, q.quarter] + [g[i, t] for g in grids]

    write_table(path, list(KEY_COLUMNS) + names, rows())
