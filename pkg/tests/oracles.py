"""Independent reference computations used only by the tests."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np


def dummy_variable_ls(y, X, unit_index):
    """Least squares of ``y`` on ``[X, unit dummies]`` via SVD (numpy.linalg.lstsq).

    Returns ``(slopes, unit_intercepts)``.
    """
    units = np.unique(unit_index)
    D = (np.asarray(unit_index)[:, None] == units[None, :]).astype(float)
    A = np.hstack([np.asarray(X, dtype=float), D])
    coef, *_ = np.linalg.lstsq(A, np.asarray(y, dtype=float), rcond=None)
    k = np.asarray(X).shape[1]
    return coef[:k], coef[k:]


def check_loss(values, tau, q):
    u = np.asarray(values, dtype=float) - q
    return float(np.sum(u * (tau - (u < 0))))


def exact_check_loss(values, tau, q) -> Fraction:
    """Check loss in exact rational arithmetic; ``tau`` is read as its decimal string."""
    t = Fraction(str(tau))
    q = Fraction(q)
    total = Fraction(0)
    for v in values:
        u = Fraction(v) - q
        total += u * (t - (1 if u < 0 else 0))
    return total


def check_loss_minimizers(values, tau):
    """Exact set of sample points attaining the minimum check loss.

    Floats are dyadic rationals, so scaling by a common power of two and by
    the denominator of ``tau`` turns every loss into an exact integer.
    """
    values = [float(v) for v in values]
    fr = [Fraction(v) for v in values]
    denom = max(f.denominator for f in fr)  # a power of two, so a common multiple
    ints = [f.numerator * (denom // f.denominator) for f in fr]
    t = Fraction(str(tau))
    p, q = t.numerator, t.denominator
    losses = {}
    for v, c in zip(values, ints):
        if v in losses:
            continue
        total = 0
        for w in ints:
            u = w - c
            total += u * (p - q) if u < 0 else u * p
        losses[v] = total
    best = min(losses.values())
    return {v for v, loss in losses.items() if loss == best}, Fraction(best, q * denom)


# Acklam's rational approximation to the normal quantile (relative error
# below 1.15e-9), followed by one Halley step against math.erfc.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def normal_ppf(p: float, refine: bool = True) -> float:
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    lo = 0.02425
    if p < lo:
        q = math.sqrt(-2 * math.log(p))
        x = (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    elif p <= 1 - lo:
        q = p - 0.5
        r = q * q
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / (
            ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1)
    else:
        q = math.sqrt(-2 * math.log(1 - p))
        x = -(((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / (
            (((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1)
    if refine:
        e = 0.5 * math.erfc(-x / math.sqrt(2)) - p
        u = e * math.sqrt(2 * math.pi) * math.exp(x * x / 2)
        x = x - u / (1 + x * u / 2)
    return x


def random_balanced_panel(rng, n, T, K, hetero=True):
    """Small random panel with unit effects; returns ``(y, X, unit_index)``."""
    X = rng.normal(size=(n * T, K))
    unit = np.repeat(np.arange(n), T)
    alpha = rng.normal(size=n)
    scale = 1.0 + (0.3 * np.abs(X).sum(axis=1) if hetero else 0.0)
    y = alpha[unit] + X @ rng.normal(size=K) + scale * rng.normal(size=n * T)
    return y, X, unit
