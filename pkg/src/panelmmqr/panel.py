"""Balanced unit-by-quarter panels and the series transforms built on them.

Series are stored as ``(n_units, n_quarters)`` float arrays.  Missing cells
are NaN; every transform propagates NaN and never invents a fill value.
"""

from __future__ import annotations

import re
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from .errors import DomainError, SchemaError

_QUARTER_RE = re.compile(r"^\s*(\d{4})\s*[-.]?\s*[Qq]([1-4])\s*$")


@dataclass(frozen=True, order=True)
class QuarterId:
    year: int
    quarter: int

    def __post_init__(self):
        if self.quarter not in (1, 2, 3, 4):
            raise ValueError(f"quarter must be in 1..4, got {self.quarter}")

    @classmethod
    def parse(cls, text: str) -> QuarterId:
        m = _QUARTER_RE.match(text)
        if m is None:
            raise ValueError(f"not a quarter label: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    @classmethod
    def from_ordinal(cls, k: int) -> QuarterId:
        y, q = divmod(k, 4)
        return cls(y, q + 1)

    @property
    def ordinal(self) -> int:
        return 4 * self.year + self.quarter - 1

    def shift(self, k: int) -> QuarterId:
        return QuarterId.from_ordinal(self.ordinal + k)

    def __str__(self) -> str:
        return f"{self.year}Q{self.quarter}"


def quarter_range(start: QuarterId, count: int) -> tuple[QuarterId, ...]:
    return tuple(start.shift(k) for k in range(count))


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PanelDataset:
    """Immutable balanced panel.

    ``series[name]`` is an ``(len(units), len(times))`` array; row order
    follows ``units`` and column order follows ``times``.
    """

    units: tuple[str, ...]
    times: tuple[QuarterId, ...]
    series: Mapping[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        units = tuple(str(u) for u in self.units)
        times = tuple(self.times)
        if len(set(units)) != len(units):
            dup = sorted({u for u in units if units.count(u) > 1})
            raise SchemaError(f"duplicate unit identifiers: {dup}")
        for a, b in zip(times, times[1:]):
            if b.ordinal != a.ordinal + 1:
                raise SchemaError(f"quarters are not consecutive: {a} followed by {b}")
        shape = (len(units), len(times))
        frozen = {}
        for name, values in self.series.items():
            arr = np.asarray(values, dtype=np.float64)
            if arr.shape != shape:
                raise SchemaError(
                    f"series {name!r} has shape {arr.shape}, panel is {shape}"
                )
            frozen[name] = _frozen(arr)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "series", MappingProxyType(frozen))

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_times(self) -> int:
        return len(self.times)

    def __contains__(self, name: str) -> bool:
        return name in self.series

    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self.series[name]
        except KeyError:
            raise SchemaError(f"unknown variable {name!r}") from None

    def with_series(self, name: str, values: np.ndarray) -> PanelDataset:
        new = dict(self.series)
        new[name] = values
        return PanelDataset(self.units, self.times, new)

    def select_units(self, idx: Sequence[int], labels: Sequence[str] | None = None) -> PanelDataset:
        """Panel made of the rows ``idx`` (repeats allowed, relabelled if needed)."""
        idx = list(idx)
        if labels is None:
            labels = [self.units[i] for i in idx]
        return PanelDataset(
            tuple(labels),
            self.times,
            {k: v[idx] for k, v in self.series.items()},
        )


def _as_2d(series) -> tuple[np.ndarray, bool]:
    a = np.asarray(series, dtype=np.float64)
    if a.ndim == 1:
        return a[None, :], True
    if a.ndim != 2:
        raise ValueError("series must be 1-D (one unit) or 2-D (units x quarters)")
    return a, False


def _cell_labels(bad: np.ndarray, units, times) -> list[tuple[object, object]]:
    cells = []
    for i, t in zip(*np.nonzero(bad)):
        u = units[i] if units is not None else int(i)
        q = str(times[t]) if times is not None else int(t)
        cells.append((u, q))
    return cells


def yoy_growth(
    series,
    method: str = "logdiff",
    units: Sequence[str] | None = None,
    times: Sequence[QuarterId] | None = None,
) -> np.ndarray:
    """Year-over-year growth in percent.

    ``logdiff`` gives ``100*(ln x_t - ln x_{t-4})``; ``pct`` gives
    ``100*(x_t - x_{t-4})/x_{t-4}``.  The first four quarters are NaN.
    Cells outside the method's domain raise :class:`DomainError` listing
    each offending unit and quarter.
    """
    x, flat = _as_2d(series)
    if x.shape[1] < 5:
        raise SchemaError("year-over-year growth needs at least 5 quarters per unit")
    cur, base = x[:, 4:], x[:, :-4]
    known = ~(np.isnan(cur) | np.isnan(base))
    out = np.full_like(x, np.nan)
    if method == "logdiff":
        bad = known & ((cur <= 0) | (base <= 0))
        if bad.any():
            raise DomainError(
                "log-difference growth needs positive values",
                _cell_labels(np.pad(bad, ((0, 0), (4, 0))), units, times),
            )
        with np.errstate(invalid="ignore"):
            out[:, 4:] = 100.0 * (np.log(cur) - np.log(base))
    elif method == "pct":
        bad = known & (base == 0)
        if bad.any():
            raise DomainError(
                "percent-change growth has a zero base",
                _cell_labels(np.pad(bad, ((0, 0), (4, 0))), units, times),
            )
        with np.errstate(invalid="ignore", divide="ignore"):
            out[:, 4:] = 100.0 * (cur - base) / base
    else:
        raise ValueError(f"unknown growth method {method!r}; use 'logdiff' or 'pct'")
    return out[0] if flat else out


def diff4(series) -> np.ndarray:
    """Four-quarter difference ``x_t - x_{t-4}``, in the units of ``x``."""
    x, flat = _as_2d(series)
    if x.shape[1] < 5:
        raise SchemaError("four-quarter difference needs at least 5 quarters per unit")
    out = np.full_like(x, np.nan)
    out[:, 4:] = x[:, 4:] - x[:, :-4]
    return out[0] if flat else out


def lag(series, j: int) -> np.ndarray:
    x, flat = _as_2d(series)
    T = x.shape[1]
    if j < 0:
        raise ValueError("lag order must be non-negative")
    if j > T - 1:
        raise ValueError(f"lag {j} exceeds the available history ({T} quarters)")
    out = np.full_like(x, np.nan)
    out[:, j:] = x[:, : T - j]
    return out[0] if flat else out


def quarterly_average_inflation(
    records: Iterable[tuple[str, int, int, float]],
) -> tuple[tuple[str, ...], tuple[QuarterId, ...], np.ndarray]:
    """Average monthly 12-month inflation rates within each quarter.

    ``records`` yields ``(unit, year, month, rate)``.  Returns units (first
    appearance order), the consecutive quarter axis spanning all records,
    and the ``(n, T)`` array of quarterly means; quarters a unit never
    reports are NaN.  A quarter with other than three distinct months is an
    error.
    """
    months: dict[tuple[str, QuarterId], dict[int, float]] = {}
    counts: dict[tuple[str, QuarterId], int] = {}
    units: list[str] = []
    for unit, year, month, rate in records:
        unit = str(unit)
        if not 1 <= int(month) <= 12:
            raise SchemaError(f"month out of range: {month}")
        if unit not in units:
            units.append(unit)
        q = QuarterId(int(year), (int(month) - 1) // 3 + 1)
        key = (unit, q)
        months.setdefault(key, {})[int(month)] = float(rate)
        counts[key] = counts.get(key, 0) + 1
    if not months:
        raise SchemaError("no monthly inflation records")
    for (unit, q), n in counts.items():
        if n != 3 or len(months[(unit, q)]) != 3:
            raise SchemaError(
                f"incomplete quarter {q} for unit {unit}: {n} monthly value(s), need 3"
            )
    first = min(q for _, q in months)
    last = max(q for _, q in months)
    times = quarter_range(first, last.ordinal - first.ordinal + 1)
    out = np.full((len(units), len(times)), np.nan)
    row = {u: i for i, u in enumerate(units)}
    for (unit, q), vals in months.items():
        m = [vals[k] for k in sorted(vals)]
        out[row[unit], q.ordinal - first.ordinal] = (m[0] + m[1] + m[2]) / 3.0
    return tuple(units), times, out


def align_to(
    times: Sequence[QuarterId],
    src_times: Sequence[QuarterId],
    values: np.ndarray,
) -> np.ndarray:
    """Reindex the last axis of ``values`` from ``src_times`` onto ``times`` (NaN fill)."""
    values = np.asarray(values, dtype=np.float64)
    pos = {q: k for k, q in enumerate(src_times)}
    out = np.full(values.shape[:-1] + (len(times),), np.nan)
    for k, q in enumerate(times):
        if q in pos:
            out[..., k] = values[..., pos[q]]
    return out


@dataclass(frozen=True)
class SeriesStats:
    """Overall / between / within summary in the usual panel layout.

    Standard deviations use ``N-1`` (overall, within) and ``n-1``
    (between) denominators.  ``T_bar = N / n``.
    """

    variable: str
    mean: float
    overall_sd: float
    overall_min: float
    overall_max: float
    between_sd: float
    between_min: float
    between_max: float
    within_sd: float
    within_min: float
    within_max: float
    N: int
    n: int
    T_bar: float

    def rows(self) -> list[tuple[str, float | None, float, float, float, float]]:
        return [
            ("overall", self.mean, self.overall_sd, self.overall_min, self.overall_max, self.N),
            ("between", None, self.between_sd, self.between_min, self.between_max, self.n),
            ("within", None, self.within_sd, self.within_min, self.within_max, self.T_bar),
        ]


def _sd(x: np.ndarray) -> float:
    if x.size < 2:
        return 0.0
    return float(np.std(x, ddof=1))


def describe(panel: PanelDataset, variable: str) -> SeriesStats:
    x = panel[variable]
    ok = ~np.isnan(x)
    N = int(ok.sum())
    if N == 0:
        raise SchemaError(f"variable {variable!r} has no observed values")
    observed = x[ok]
    grand = float(observed.mean())
    has = ok.any(axis=1)
    cnt = ok.sum(axis=1)
    unit_means = np.where(ok, x, 0.0).sum(axis=1)[has] / cnt[has]
    # identical rows give bit-identical unit means, so between sd is exactly 0
    if np.all(unit_means == unit_means[0]):
        between_sd = 0.0
    else:
        between_sd = _sd(unit_means)
    rowmean = np.zeros(x.shape[0])
    rowmean[has] = unit_means
    within = (x - rowmean[:, None] + grand)[ok]
    n = int(has.sum())
    return SeriesStats(
        variable=variable,
        mean=grand,
        overall_sd=_sd(observed),
        overall_min=float(observed.min()),
        overall_max=float(observed.max()),
        between_sd=between_sd,
        between_min=float(unit_means.min()),
        between_max=float(unit_means.max()),
        within_sd=_sd(within),
        within_min=float(within.min()),
        within_max=float(within.max()),
        N=N,
        n=n,
        T_bar=N / n,
    )


def sum_of_squares_split(x: np.ndarray) -> tuple[float, float, float]:
    """(total SS, within SS, between SS of unit means) for a fully observed grid."""
    x = np.asarray(x, dtype=np.float64)
    grand = x.mean()
    um = x.mean(axis=1)
    return (
        float(((x - grand) ** 2).sum()),
        float(((x - um[:, None]) ** 2).sum()),
        float(((um - grand) ** 2).sum()),
    )
