"""Model specifications and design-matrix construction.

A :class:`ModelSpec` says which inflation measure enters, at which lags,
and whether the policy controls are included.  :func:`build_design` turns a
panel plus a spec into aligned ``y`` / ``X`` arrays for the estimator.

Panel variable names
--------------------
Levels: ``gini``, ``inc``, ``ffr``, ``gte``; rates: ``pi``.
Derived: ``ineqgrowth`` (growth of ``gini``), ``incgrowth`` (growth of
``inc``), ``dffr`` (four-quarter difference of ``ffr``), ``dGTE`` (growth
of ``gte``) and ``unexpinfl`` (``pi`` minus the forecast made a year
earlier).  A derived variable present in the panel is used as is;
otherwise it is built from its level.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ParseError, RankError, SchemaError
from .panel import PanelDataset, QuarterId, diff4, lag, yoy_growth

OUTCOME = "ineqgrowth"
INCOME = "incgrowth"
CONTROLS = ("dffr", "dGTE")

# derived name -> (level name, transform)
DERIVED = {
    "ineqgrowth": ("gini", "growth"),
    "incgrowth": ("inc", "growth"),
    "dffr": ("ffr", "diff4"),
    "dGTE": ("gte", "growth"),
}

INFLATION_VARIABLE = {"actual": "pi", "unexpected": "unexpinfl"}


def quantile_grid(start: float = 0.05, stop: float = 0.95, step: float = 0.05) -> tuple[float, ...]:
    """Inclusive arithmetic grid, rounded to 10 decimals so 0.05*k prints cleanly."""
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 10) for k in range(count))


def parse_grid(text: str) -> tuple[float, ...]:
    """``START:STOP:STEP`` or a comma-separated list of quantiles."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"grid must be START:STOP:STEP, got {text!r}")
        return quantile_grid(*(float(p) for p in parts))
    return tuple(float(p) for p in text.split(",") if p.strip())


def parse_lags(text: str) -> tuple[int, ...]:
    text = text.strip()
    if "-" in text and "," not in text:
        lo, hi = text.split("-")
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(p) for p in text.split(",") if p.strip())


@dataclass(frozen=True)
class ModelSpec:
    inflation_kind: str = "actual"
    lag_set: tuple[int, ...] = (0, 1, 2, 3, 4)
    include_controls: bool = False
    quantile_grid: tuple[float, ...] = field(default_factory=quantile_grid)
    bootstrap_reps: int = 500
    rng_seed: int = 0
    growth_methods: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.inflation_kind not in INFLATION_VARIABLE:
            raise ValueError(f"inflation_kind must be actual or unexpected, got {self.inflation_kind!r}")
        lags = tuple(sorted(set(int(j) for j in self.lag_set)))
        if not lags:
            raise ValueError("lag_set must be nonempty")
        if lags[0] < 0 or lags[-1] > 4:
            raise ValueError("lags must lie in 0..4")
        grid = tuple(float(t) for t in self.quantile_grid)
        if not grid:
            raise ValueError("quantile grid is empty")
        if any(not 0.0 < t < 1.0 for t in grid):
            raise ValueError("every quantile must lie strictly between 0 and 1")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("quantile grid must be strictly increasing")
        if self.bootstrap_reps < 0:
            raise ValueError("bootstrap_reps must be non-negative")
        for var, method in self.growth_methods.items():
            if method not in ("logdiff", "pct"):
                raise ValueError(f"growth method for {var} must be logdiff or pct")
        object.__setattr__(self, "lag_set", lags)
        object.__setattr__(self, "quantile_grid", grid)
        object.__setattr__(self, "growth_methods", dict(self.growth_methods))

    @property
    def inflation_variable(self) -> str:
        return INFLATION_VARIABLE[self.inflation_kind]

    def column_names(self) -> list[str]:
        cols = [f"{self.inflation_variable}_l{j}" for j in self.lag_set]
        cols.append(INCOME)
        if self.include_controls:
            cols.extend(CONTROLS)
        return cols

    def to_config(self) -> str:
        lines = [
            f"inflation = {self.inflation_kind}",
            "lags = " + ",".join(str(j) for j in self.lag_set),
            f"controls = {'on' if self.include_controls else 'off'}",
            "grid = " + ",".join(repr(t) for t in self.quantile_grid),
            f"bootstrap = {self.bootstrap_reps}",
            f"seed = {self.rng_seed}",
        ]
        for var in sorted(self.growth_methods):
            lines.append(f"growth.{var} = {self.growth_methods[var]}")
        return "\n".join(lines) + "\n"


PRESETS = {
    "fig5": dict(inflation_kind="actual", include_controls=False),
    "fig6": dict(inflation_kind="actual", include_controls=True),
    "fig7": dict(inflation_kind="unexpected", include_controls=False),
    "fig8": dict(inflation_kind="unexpected", include_controls=True),
}


def preset(figure: str) -> ModelSpec:
    """Specification behind one of the coefficient-by-quantile figures.

    All presets enter lags 0..4 jointly on the 0.05..0.95 grid.
    """
    try:
        kw = PRESETS[figure]
    except KeyError:
        raise ValueError(f"unknown preset {figure!r}; choose from {sorted(PRESETS)}") from None
    return ModelSpec(lag_set=(0, 1, 2, 3, 4), quantile_grid=quantile_grid(), **kw)


def _on_off(value: str) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {value!r}")


def apply_overrides(spec: ModelSpec, items: Mapping[str, str]) -> ModelSpec:
    """Override fields of ``spec`` from string key/value pairs (config-file keys)."""
    kw: dict = {}
    growth = dict(spec.growth_methods)
    for key, value in items.items():
        key = key.strip()
        value = value.strip()
        if key == "inflation":
            kw["inflation_kind"] = value
        elif key == "lags":
            kw["lag_set"] = parse_lags(value)
        elif key == "controls":
            kw["include_controls"] = _on_off(value)
        elif key == "grid":
            kw["quantile_grid"] = parse_grid(value)
        elif key == "bootstrap":
            kw["bootstrap_reps"] = int(value)
        elif key == "seed":
            kw["rng_seed"] = int(value)
        elif key.startswith("growth."):
            growth[key[len("growth."):]] = value
        elif key == "preset":
            continue
        else:
            raise ValueError(f"unknown specification key {key!r}")
    kw["growth_methods"] = growth
    return replace(spec, **kw)


def parse_key_values(text: str, source: str = "<config>") -> dict[str, str]:
    items: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected key = value", source, lineno)
        key, value = line.split("=", 1)
        items[key.strip()] = value.strip()
    return items


def spec_from_config(text: str, source: str = "<config>") -> ModelSpec:
    items = parse_key_values(text, source)
    base = preset(items["preset"]) if "preset" in items else ModelSpec()
    return apply_overrides(base, items)


def unexpected_inflation(
    actual,
    times: Sequence[QuarterId],
    forecast: Mapping[QuarterId, float],
) -> np.ndarray:
    """Realised inflation minus the one-year-ahead forecast made four quarters earlier.

    ``forecast`` is keyed by the quarter the forecast was made.  Target
    quarters whose origin precedes the first forecast are NaN; a missing
    origin anywhere later is an error.
    """
    actual = np.asarray(actual, dtype=np.float64)
    if not forecast:
        raise SchemaError("forecast series is empty")
    first = min(forecast)
    out = np.full(actual.shape, np.nan)
    for k, t in enumerate(times):
        origin = t.shift(-4)
        if origin < first:
            continue
        if origin not in forecast:
            raise SchemaError(f"missing forecast for origin quarter {origin} (target {t})")
        out[..., k] = actual[..., k] - forecast[origin]
    return out


def derive(
    panel: PanelDataset,
    name: str,
    growth_methods: Mapping[str, str] | None = None,
    forecast: Mapping[QuarterId, float] | None = None,
) -> np.ndarray:
    """Return variable ``name`` from the panel, building it from levels if absent."""
    if name in panel:
        return panel[name]
    growth_methods = growth_methods or {}
    if name == "unexpinfl":
        if forecast is None:
            raise SchemaError("unexpected inflation needs 'unexpinfl' in the panel or a forecast file")
        return unexpected_inflation(derive(panel, "pi"), panel.times, forecast)
    if name in DERIVED:
        level, how = DERIVED[name]
        if level not in panel:
            raise SchemaError(f"panel has neither {name!r} nor its level {level!r}")
        if how == "diff4":
            return diff4(panel[level])
        method = growth_methods.get(name, growth_methods.get(level, "logdiff"))
        return yoy_growth(panel[level], method, panel.units, panel.times)
    raise SchemaError(f"panel has no variable {name!r}")


def derivable(panel: PanelDataset, name: str, forecast=None) -> bool:
    if name in panel:
        return True
    if name == "unexpinfl":
        return forecast is not None and derivable(panel, "pi")
    return name in DERIVED and DERIVED[name][0] in panel


def assemble(
    panel: PanelDataset,
    growth_methods: Mapping[str, str] | None = None,
    forecast: Mapping[QuarterId, float] | None = None,
) -> PanelDataset:
    """Add every derivable summary variable (``ineqgrowth`` .. ``unexpinfl``) to the panel."""
    out = panel
    for name in ("ineqgrowth", "incgrowth", "dffr", "dGTE", "unexpinfl"):
        if name not in out and derivable(panel, name, forecast):
            out = out.with_series(name, derive(panel, name, growth_methods, forecast))
    return out


@dataclass(frozen=True)
class DesignMatrix:
    """Outcome and regressors for a balanced panel, rows grouped by unit."""

    y: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]
    units: tuple[str, ...]
    times: tuple[QuarterId, ...]

    def __post_init__(self):
        n, T = len(self.units), len(self.times)
        y = np.asarray(self.y, dtype=np.float64).reshape(-1)
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X[:, None]
        if y.shape[0] != n * T or X.shape != (n * T, len(self.columns)):
            raise SchemaError(
                f"design shape mismatch: y {y.shape}, X {X.shape}, {n} units x {T} quarters, "
                f"{len(self.columns)} columns"
            )
        if np.isnan(y).any() or np.isnan(X).any():
            raise SchemaError("design contains missing values")
        y.setflags(write=False)
        X.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "times", tuple(self.times))

    @property
    def n_units(self) -> int:
        return len(self.units)

    @property
    def n_times(self) -> int:
        return len(self.times)

    @property
    def unit_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.n_units), self.n_times)

    @property
    def time_index(self) -> tuple[QuarterId, ...]:
        return self.times * self.n_units

    def select_units(self, idx: Sequence[int]) -> DesignMatrix:
        """Design of a unit resample; repeated units get ``#k`` suffixes."""
        T = self.n_times
        rows = (np.asarray(idx)[:, None] * T + np.arange(T)[None, :]).reshape(-1)
        seen: dict[int, int] = {}
        labels = []
        for i in idx:
            k = seen.get(i, 0)
            seen[i] = k + 1
            labels.append(self.units[i] if k == 0 else f"{self.units[i]}#{k}")
        return DesignMatrix(self.y[rows], self.X[rows], self.columns, tuple(labels), self.times)


def check_within_variation(design: DesignMatrix) -> None:
    n, T = design.n_units, design.n_times
    Xr = design.X.reshape(n, T, -1)
    dm = Xr - Xr.mean(axis=1, keepdims=True)
    scale = np.maximum(np.abs(Xr).max(axis=(0, 1)), 1.0)
    for k, name in enumerate(design.columns):
        if np.abs(dm[:, :, k]).max() <= 1e-12 * scale[k]:
            raise RankError(f"column {name!r} has no within-unit variation", (name,))


def build_design(
    panel: PanelDataset,
    spec: ModelSpec,
    forecast: Mapping[QuarterId, float] | None = None,
) -> DesignMatrix:
    """Aligned outcome / regressor arrays for ``spec``.

    At least ``max(4, max lag)`` leading quarters are dropped from every
    unit, and more if some regressor is still undefined there (e.g.
    unexpected inflation before the forecast series starts); any missing
    cell after that point is an error because the estimator needs a
    balanced panel.
    """
    gm = spec.growth_methods
    y = derive(panel, OUTCOME, gm, forecast)
    infl = derive(panel, spec.inflation_variable, gm, forecast)
    grids = [lag(infl, j) for j in spec.lag_set]
    grids.append(derive(panel, INCOME, gm, forecast))
    if spec.include_controls:
        grids.extend(derive(panel, c, gm, forecast) for c in CONTROLS)
    columns = spec.column_names()

    stack = np.stack([y] + grids, axis=-1)  # (n, T, 1 + K)
    complete = ~np.isnan(stack).any(axis=(0, 2))
    start = max(4, spec.lag_set[-1])
    observed = np.nonzero(complete[start:])[0]
    if observed.size == 0:
        raise SchemaError("no quarter has every design variable observed for all units")
    start += int(observed[0])
    gaps = np.nonzero(~complete[start:])[0]
    if gaps.size:
        t = start + int(gaps[0])
        names = [OUTCOME] + columns
        bad = [names[k] for k in range(stack.shape[2]) if np.isnan(stack[:, t, k]).any()]
        raise SchemaError(
            f"missing values at {panel.times[t]} in {bad}; unbalanced panels are not supported"
        )
    kept = stack[:, start:, :]
    n, T = kept.shape[0], kept.shape[1]
    design = DesignMatrix(
        y=kept[:, :, 0].reshape(n * T),
        X=kept[:, :, 1:].reshape(n * T, len(columns)),
        columns=tuple(columns),
        units=panel.units,
        times=panel.times[start:],
    )
    check_within_variation(design)
    return design
