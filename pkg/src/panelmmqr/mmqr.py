"""Method-of-moments quantile regression with unit fixed effects.

Model::

    y_it = alpha_i + x_it' beta + (delta_i + x_it' gamma) * U_it

Three stages: a within (unit-demeaned) least-squares fit for the location
part, a within least-squares fit of the absolute location residuals on the
same regressors for the scale part, and an order statistic of the
standardized residuals ``R_it / sigma_it`` for each quantile.  The quantile
coefficients are then ``beta + q(tau) * gamma`` and the quantile-specific
unit effects ``alpha_i + delta_i * q(tau)``.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .design import DesignMatrix
from .errors import PositivityError, RankError

RANK_TOL = 1e-10


def within_demean(a: np.ndarray, n_units: int, n_times: int) -> tuple[np.ndarray, np.ndarray]:
    """Subtract unit means from a unit-grouped array.

    Returns ``(demeaned, unit_means)``; works for vectors and matrices.
    """
    shaped = a.reshape((n_units, n_times) + a.shape[1:])
    means = shaped.mean(axis=1)
    dm = shaped - means[:, None, ...]
    return dm.reshape(a.shape), means


def lstsq_rank_revealing(
    A: np.ndarray, b: np.ndarray, columns: Sequence[str] = (), tol: float = RANK_TOL
) -> np.ndarray:
    """Least squares through a column-pivoted QR factorisation.

    A diagonal entry of ``R`` below ``tol * |R[0, 0]|`` marks rank
    deficiency; the pivoted-out columns are named in the raised
    :class:`RankError`.
    """
    K = A.shape[1]
    if K == 0:
        return np.zeros(0)
    Q, R, piv = linalg.qr(A, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    lead = d[0] if d.size else 0.0
    rank = int(np.sum(d > tol * lead)) if lead > 0 else 0
    if rank < K:
        names = tuple(columns[j] if j < len(columns) else f"x{j}" for j in sorted(piv[rank:]))
        raise RankError(
            f"within-demeaned regressors are rank deficient (rank {rank} < {K}); "
            f"dependent column set: {list(names)}",
            names,
        )
    coef_piv = linalg.solve_triangular(R[:K, :K], Q.T @ b)
    coef = np.empty(K)
    coef[piv] = coef_piv
    return coef


@dataclass(frozen=True)
class LocationFit:
    beta: np.ndarray
    alpha: np.ndarray
    residuals: np.ndarray
    columns: tuple[str, ...]
    units: tuple[str, ...]


@dataclass(frozen=True)
class ScaleFit:
    gamma: np.ndarray
    delta: np.ndarray
    fitted_scale: np.ndarray


def _within_fit(target: np.ndarray, design: DesignMatrix) -> tuple[np.ndarray, np.ndarray]:
    n, T = design.n_units, design.n_times
    Xd, xbar = within_demean(design.X, n, T)
    td, tbar = within_demean(target, n, T)
    coef = lstsq_rank_revealing(Xd, td, design.columns)
    intercepts = tbar - xbar @ coef
    return coef, intercepts


def fit_location(design: DesignMatrix) -> LocationFit:
    beta, alpha = _within_fit(design.y, design)
    resid = design.y - np.repeat(alpha, design.n_times) - design.X @ beta
    return LocationFit(beta, alpha, resid, design.columns, design.units)


def fit_scale(location: LocationFit, design: DesignMatrix) -> ScaleFit:
    """Fixed-effects least squares of ``|R_it|`` on the regressors.

    Raises :class:`PositivityError` when any fitted scale is not positive.
    """
    gamma, delta = _within_fit(np.abs(location.residuals), design)
    sigma = np.repeat(delta, design.n_times) + design.X @ gamma
    bad = sigma <= 0
    if bad.any():
        raise PositivityError(int(bad.sum()), float(sigma.min()))
    return ScaleFit(gamma, delta, sigma)


def order_statistic_rank(tau: float, m: int) -> int:
    """1-based rank ``ceil(tau*m)`` of the lower check-loss minimizer.

    The slack absorbs representation error when ``tau*m`` is an integer in
    exact arithmetic (``0.7*10`` evaluates to ``7.000000000000001``).
    """
    tm = tau * m
    return min(max(math.ceil(tm - 1e-12 * max(tm, 1.0)), 1), m)


def sample_quantile(values: np.ndarray, tau: float, presorted: bool = False) -> float:
    v = values if presorted else np.sort(values)
    return float(v[order_statistic_rank(tau, v.size) - 1])


def standardized_residuals(location: LocationFit, scale: ScaleFit) -> np.ndarray:
    return location.residuals / scale.fitted_scale


def standardized_quantile(location: LocationFit, scale: ScaleFit, tau: float) -> float:
    return sample_quantile(standardized_residuals(location, scale), tau)


@dataclass(frozen=True)
class MMQRFit:
    location: LocationFit
    scale: ScaleFit
    grid: tuple[float, ...]
    q: dict[float, float]
    coefficients: dict[float, np.ndarray]
    fixed_effects_at_tau: dict[float, np.ndarray]

    @property
    def columns(self) -> tuple[str, ...]:
        return self.location.columns

    def coefficient_matrix(self) -> np.ndarray:
        """``(len(grid), K)`` array of quantile coefficients."""
        return np.array([self.coefficients[t] for t in self.grid])

    def affine_residual(self) -> float:
        """Largest relative violation of ``coef[tau] = beta + q[tau]*gamma``."""
        b, g = self.location.beta, self.scale.gamma
        worst = 0.0
        for t in self.grid:
            ref = np.maximum(np.abs(b) + np.abs(self.q[t] * g), 1.0)
            err = np.abs(self.coefficients[t] - b - self.q[t] * g) / ref
            worst = max(worst, float(err.max(initial=0.0)))
        return worst

    def dump_rows(self) -> list[tuple[str, str, float]]:
        """``(parameter, key, value)`` triples for the delimited fit dump."""
        rows: list[tuple[str, str, float]] = []
        for name, v in zip(self.columns, self.location.beta):
            rows.append(("beta", name, float(v)))
        for name, v in zip(self.columns, self.scale.gamma):
            rows.append(("gamma", name, float(v)))
        for u, v in zip(self.location.units, self.location.alpha):
            rows.append(("alpha", u, float(v)))
        for u, v in zip(self.location.units, self.scale.delta):
            rows.append(("delta", u, float(v)))
        for t in self.grid:
            rows.append(("q", repr(t), self.q[t]))
        return rows


def fit(design: DesignMatrix, grid: Sequence[float]) -> MMQRFit:
    grid = tuple(float(t) for t in grid)
    loc = fit_location(design)
    sc = fit_scale(loc, design)
    z = np.sort(standardized_residuals(loc, sc))
    q, coefs, fe = {}, {}, {}
    for t in grid:
        qt = sample_quantile(z, t, presorted=True)
        q[t] = qt
        coefs[t] = loc.beta + qt * sc.gamma
        fe[t] = loc.alpha + qt * sc.delta
    return MMQRFit(loc, sc, grid, q, coefs, fe)
