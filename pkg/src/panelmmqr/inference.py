"""Unit-level bootstrap inference for quantile coefficients."""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import mmqr
from .design import DesignMatrix, ModelSpec, build_design
from .errors import InferenceError, PositivityError, RankError
from .panel import PanelDataset, QuarterId

MAX_DISCARD_SHARE = 0.20


def star(p: float) -> str:
    """Significance code: ``***`` below 0.01, ``**`` below 0.05, ``*`` below 0.10."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p-value must lie in [0, 1], got {p!r}")
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.10:
        return "*"
    return ""


def normal_p_value(estimate: float, se: float) -> float:
    """Two-sided p-value ``2*(1 - Phi(|estimate/se|))``."""
    if se == 0.0:
        return 1.0 if estimate == 0.0 else 0.0
    return min(1.0, math.erfc(abs(estimate / se) / math.sqrt(2.0)))


@dataclass(frozen=True)
class CoefRow:
    tau: float
    column: str
    estimate: float
    std_error: float | None = None
    p_value: float | None = None
    stars: str | None = None
    B: int = 0


@dataclass(frozen=True)
class CoefficientTable:
    rows: tuple[CoefRow, ...]
    requested: int = 0
    discarded: int = 0
    replicates: np.ndarray | None = field(default=None, repr=False, compare=False)

    HEADER = ("tau", "column", "estimate", "std_error", "p_value", "stars", "B")

    def get(self, tau: float, column: str) -> CoefRow:
        for r in self.rows:
            if r.column == column and r.tau == tau:
                return r
        raise KeyError((tau, column))

    def column(self, name: str) -> list[CoefRow]:
        return [r for r in self.rows if r.column == name]


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Private stream for replicate ``r``; depends only on ``(seed, r)``."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))


def _one_replicate(design: DesignMatrix, grid: tuple[float, ...], seed: int, r: int):
    n = design.n_units
    idx = replicate_rng(seed, r).integers(0, n, size=n)
    try:
        return mmqr.fit(design.select_units(idx), grid).coefficient_matrix()
    except (RankError, PositivityError):
        return None


def bootstrap_design(
    design: DesignMatrix,
    grid: Sequence[float],
    reps: int,
    seed: int,
    workers: int = 1,
    point: mmqr.MMQRFit | None = None,
) -> CoefficientTable:
    """Resample whole units with replacement ``reps`` times and refit.

    Every design row depends only on its own unit's history, so a resample
    of the design's unit blocks equals the design rebuilt from the
    resampled panel.
    """
    grid = tuple(grid)
    if point is None:
        point = mmqr.fit(design, grid)
    est = point.coefficient_matrix()
    cols = design.columns
    if reps == 0:
        rows = tuple(
            CoefRow(t, c, float(est[a, k])) for a, t in enumerate(grid) for k, c in enumerate(cols)
        )
        return CoefficientTable(rows)
    if design.n_units < 3:
        raise InferenceError(f"bootstrap needs at least 3 units, got {design.n_units}")

    def task(r):
        return _one_replicate(design, grid, seed, r)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            draws = list(pool.map(task, range(reps)))
    else:
        draws = [task(r) for r in range(reps)]
    kept = [d for d in draws if d is not None]
    discarded = reps - len(kept)
    if discarded > MAX_DISCARD_SHARE * reps or len(kept) < 2:
        raise InferenceError(
            f"{discarded} of {reps} bootstrap replicates failed; inference is unreliable"
        )
    reps_arr = np.stack(kept)  # (B, len(grid), K)
    se = reps_arr.std(axis=0, ddof=1)
    B = len(kept)
    rows = []
    for a, t in enumerate(grid):
        for k, c in enumerate(cols):
            e, s = float(est[a, k]), float(se[a, k])
            p = normal_p_value(e, s)
            rows.append(CoefRow(t, c, e, s, p, star(p), B))
    return CoefficientTable(tuple(rows), reps, discarded, reps_arr)


def cluster_bootstrap(
    panel: PanelDataset,
    spec: ModelSpec,
    forecast: Mapping[QuarterId, float] | None = None,
    workers: int = 1,
) -> CoefficientTable:
    design = build_design(panel, spec, forecast)
    return bootstrap_design(design, spec.quantile_grid, spec.bootstrap_reps, spec.rng_seed, workers)
