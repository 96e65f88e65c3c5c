"""Simulation from the location-scale panel model and recovery experiments."""

from __future__ import annotations

from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import mmqr
from .design import OUTCOME, DesignMatrix, quantile_grid
from .errors import PositivityError, RankError, SchemaError
from .inference import bootstrap_design
from .panel import PanelDataset, QuarterId, quarter_range

DEFAULT_COLUMNS = ("pi", "incgrowth", "dffr", "dGTE")
INNOVATIONS = ("normal", "uniform", "t")
MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class DGPSpec:
    """Data-generating process ``y = alpha_i + x'beta + (delta_i + x'gamma) U``.

    Regressors are i.i.d. uniform on ``[x_low, x_high]``.  ``alpha`` and
    ``delta`` are fixed per-unit lists when given; otherwise ``alpha_i`` is
    normal with sd ``alpha_sd`` and ``delta_i`` uniform on ``delta_range``.
    Innovations have mean zero and unit variance under every law.
    """

    n: int = 34
    T: int = 110
    beta: tuple[float, ...] = (-0.1, 0.5)
    gamma: tuple[float, ...] = (0.3, 0.2)
    alpha: tuple[float, ...] | None = None
    delta: tuple[float, ...] | None = None
    alpha_sd: float = 1.0
    delta_range: tuple[float, float] = (1.0, 2.0)
    x_low: float = 0.0
    x_high: float = 1.0
    innovation: str = "normal"
    df: float = 5.0
    seed: int = 0
    columns: tuple[str, ...] | None = None
    start: QuarterId = QuarterId(1990, 1)

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        gamma = tuple(float(g) for g in self.gamma)
        if len(beta) != len(gamma) or not beta:
            raise ValueError("beta and gamma must be nonempty and of equal length")
        cols = self.columns
        if cols is None:
            if len(beta) > len(DEFAULT_COLUMNS):
                cols = tuple(f"x{k + 1}" for k in range(len(beta)))
            else:
                cols = DEFAULT_COLUMNS[: len(beta)]
        if len(cols) != len(beta):
            raise ValueError("one column name per coefficient")
        if self.innovation not in INNOVATIONS:
            raise ValueError(f"innovation must be one of {INNOVATIONS}")
        if self.innovation == "t" and self.df <= 2:
            raise ValueError("student-t innovations need df > 2 to be standardized")
        if self.alpha is not None and len(self.alpha) != self.n:
            raise ValueError("alpha list must have one entry per unit")
        if self.delta is not None:
            if len(self.delta) != self.n:
                raise ValueError("delta list must have one entry per unit")
        elif not 0 < self.delta_range[0] <= self.delta_range[1]:
            raise ValueError("delta_range must be positive and ordered")
        if self.x_high < self.x_low:
            raise ValueError("x_high must be at least x_low")
        if self.n < 1 or self.T < 2:
            raise ValueError("need n >= 1 and T >= 2")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "columns", tuple(cols))

    @property
    def k(self) -> int:
        return len(self.beta)

    def innovation_quantile(self, tau: float) -> float:
        if self.innovation == "normal":
            return float(stats.norm.ppf(tau))
        if self.innovation == "uniform":
            return float(np.sqrt(3.0) * (2.0 * tau - 1.0))
        return float(stats.t.ppf(tau, self.df) * np.sqrt((self.df - 2.0) / self.df))

    def true_coefficients(self, tau: float) -> np.ndarray:
        return np.asarray(self.beta) + self.innovation_quantile(tau) * np.asarray(self.gamma)


@dataclass(frozen=True)
class Truth:
    alpha: np.ndarray
    delta: np.ndarray
    X: np.ndarray  # (n, T, K)
    U: np.ndarray  # (n, T)
    sigma: np.ndarray  # (n, T)


def _draw_innovations(rng: np.random.Generator, dgp: DGPSpec, shape) -> np.ndarray:
    if dgp.innovation == "normal":
        return rng.standard_normal(shape)
    if dgp.innovation == "uniform":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), shape)
    return rng.standard_t(dgp.df, shape) * np.sqrt((dgp.df - 2.0) / dgp.df)


def simulation_rng(seed: int, replication: int | None = None) -> np.random.Generator:
    key = () if replication is None else (replication,)
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def simulate_arrays(dgp: DGPSpec, rng: np.random.Generator) -> tuple[np.ndarray, Truth]:
    n, T, K = dgp.n, dgp.T, dgp.k
    beta, gamma = np.asarray(dgp.beta), np.asarray(dgp.gamma)
    alpha = (
        np.asarray(dgp.alpha, dtype=float)
        if dgp.alpha is not None
        else rng.normal(0.0, dgp.alpha_sd, n)
    )
    for _ in range(MAX_ATTEMPTS):
        delta = (
            np.asarray(dgp.delta, dtype=float)
            if dgp.delta is not None
            else rng.uniform(dgp.delta_range[0], dgp.delta_range[1], n)
        )
        X = rng.uniform(dgp.x_low, dgp.x_high, (n, T, K))
        sigma = delta[:, None] + X @ gamma
        if (sigma > 0).all():
            break
    else:
        raise SchemaError(
            f"scale positivity not reached after {MAX_ATTEMPTS} draws; shrink gamma or raise delta"
        )
    U = _draw_innovations(rng, dgp, (n, T))
    y = alpha[:, None] + X @ beta + sigma * U
    return y, Truth(alpha, delta, X, U, sigma)


def simulate(dgp: DGPSpec, replication: int | None = None) -> tuple[PanelDataset, Truth]:
    """One panel from ``dgp``; a pure function of ``(dgp.seed, replication)``."""
    y, truth = simulate_arrays(dgp, simulation_rng(dgp.seed, replication))
    units = tuple(f"U{i + 1:02d}" for i in range(dgp.n))
    series = {OUTCOME: y}
    for k, name in enumerate(dgp.columns):
        series[name] = truth.X[:, :, k]
    return PanelDataset(units, quarter_range(dgp.start, dgp.T), series), truth


def design_from_simulation(panel: PanelDataset, columns: Sequence[str]) -> DesignMatrix:
    """Contemporaneous design over every simulated quarter (no lags, no trimming)."""
    n, T = panel.n_units, panel.n_times
    X = np.stack([panel[c] for c in columns], axis=-1).reshape(n * T, len(columns))
    return DesignMatrix(panel[OUTCOME].reshape(n * T), X, tuple(columns), panel.units, panel.times)


def _fit_replication(dgp: DGPSpec, grid: tuple[float, ...], r: int):
    panel, _ = simulate(dgp, r)
    try:
        return mmqr.fit(design_from_simulation(panel, dgp.columns), grid).coefficient_matrix()
    except (RankError, PositivityError):
        return None


def _run(task, count: int, workers: int) -> list:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(task, range(count)))
    return [task(r) for r in range(count)]


@dataclass(frozen=True)
class RecoveryRow:
    tau: float
    column: str
    truth: float
    mean_estimate: float
    bias: float
    mc_se: float
    rmse: float
    failures: int


@dataclass(frozen=True)
class ProfileRow:
    """Signed spread ``coef(tau_max) - coef(tau_min)`` across replications."""

    column: str
    truth: float
    mean_spread: float
    mc_se: float
    flat: bool


@dataclass(frozen=True)
class RecoveryReport:
    grid: tuple[float, ...]
    columns: tuple[str, ...]
    rows: tuple[RecoveryRow, ...]
    profile: tuple[ProfileRow, ...]
    replications: int
    failures: int
    estimates: np.ndarray = field(repr=False, compare=False)

    HEADER = ("tau", "column", "truth", "mean_estimate", "bias", "mc_se", "rmse", "failures")
    PROFILE_HEADER = ("column", "truth_spread", "mean_spread", "mc_se", "flat")

    def row(self, tau: float, column: str) -> RecoveryRow:
        for r in self.rows:
            if r.tau == tau and r.column == column:
                return r
        raise KeyError((tau, column))


def recovery_experiment(
    dgp: DGPSpec,
    replications: int,
    grid: Sequence[float] | None = None,
    workers: int = 1,
) -> RecoveryReport:
    """Monte Carlo bias, spread and RMSE of the quantile coefficients.

    The truth at ``tau`` is ``beta + q_U(tau) * gamma`` with the analytic
    quantile of the innovation law.  Flatness uses a 3 Monte Carlo
    standard-error bound on the mean signed spread.
    """
    if replications < 1:
        raise ValueError("need at least one replication")
    grid = tuple(grid) if grid is not None else quantile_grid(0.1, 0.9, 0.1)
    draws = _run(lambda r: _fit_replication(dgp, grid, r), replications, workers)
    kept = [d for d in draws if d is not None]
    failures = replications - len(kept)
    if not kept:
        raise SchemaError(f"all {replications} replications failed to fit")
    est = np.stack(kept)  # (R, G, K)
    R = est.shape[0]
    truth = np.array([dgp.true_coefficients(t) for t in grid])
    mean = est.mean(axis=0)
    sd = est.std(axis=0, ddof=1) if R > 1 else np.zeros_like(mean)
    mcse = sd / np.sqrt(R)
    rmse = np.sqrt(((est - truth) ** 2).mean(axis=0))
    rows = []
    for a, t in enumerate(grid):
        for k, c in enumerate(dgp.columns):
            rows.append(
                RecoveryRow(
                    t, c, float(truth[a, k]), float(mean[a, k]), float(mean[a, k] - truth[a, k]),
                    float(mcse[a, k]), float(rmse[a, k]), failures,
                )
            )
    spread = est[:, -1, :] - est[:, 0, :]
    true_spread = truth[-1] - truth[0]
    sp_mean = spread.mean(axis=0)
    sp_se = spread.std(axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros(dgp.k)
    profile = tuple(
        ProfileRow(c, float(true_spread[k]), float(sp_mean[k]), float(sp_se[k]),
                   bool(abs(sp_mean[k]) < 3.0 * sp_se[k]) if sp_se[k] > 0 else bool(sp_mean[k] == 0))
        for k, c in enumerate(dgp.columns)
    )
    return RecoveryReport(grid, dgp.columns, tuple(rows), profile, replications, failures, est)


@dataclass(frozen=True)
class CoverageResult:
    tau: float
    level: float
    columns: tuple[str, ...]
    truth: np.ndarray
    covered: np.ndarray  # (R, K) booleans

    @property
    def coverage(self) -> np.ndarray:
        return self.covered.mean(axis=0)


def coverage_experiment(
    dgp: DGPSpec,
    replications: int,
    bootstrap_reps: int,
    tau: float = 0.5,
    level: float = 0.90,
    workers: int = 1,
) -> CoverageResult:
    """Share of replications whose normal bootstrap interval covers ``beta(tau)``."""
    z = float(stats.norm.ppf(0.5 + level / 2.0))
    truth = dgp.true_coefficients(tau)

    def task(r):
        panel, _ = simulate(dgp, r)
        design = design_from_simulation(panel, dgp.columns)
        boot_seed = int(np.random.SeedSequence(entropy=dgp.seed, spawn_key=(r, 1)).generate_state(1)[0])
        table = bootstrap_design(design, (tau,), bootstrap_reps, boot_seed)
        est = np.array([table.get(tau, c).estimate for c in dgp.columns])
        se = np.array([table.get(tau, c).std_error for c in dgp.columns])
        return np.abs(est - truth) <= z * se

    covered = np.array(_run(task, replications, workers))
    return CoverageResult(tau, level, dgp.columns, truth, covered)
