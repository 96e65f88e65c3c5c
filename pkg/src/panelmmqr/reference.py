"""Published descriptive statistics and the qualitative coefficient pattern.

``TABLE2[var][part]`` holds ``(mean, sd, min, max, count)``; ``count`` is N
for the overall row, n for between and T-bar for within.  Mean is only
reported on the overall row.
"""

from __future__ import annotations

from dataclasses import dataclass

from .inference import CoefficientTable
from .panel import SeriesStats

TABLE2 = {
    "ineqgrowth": {
        "overall": (0.56, 3.14, -11.07, 12.35, 3740),
        "between": (None, 0.19, 0.10, 1.00, 34),
        "within": (None, 3.13, -11.26, 12.32, 110),
    },
    "pi": {
        "overall": (2.28, 1.38, -4.03, 9.35, 3740),
        "between": (None, 0.23, 1.82, 2.90, 34),
        "within": (None, 1.36, -3.72, 9.21, 110),
    },
    "incgrowth": {
        "overall": (3.63, 2.90, -105.82, 12.08, 3740),
        "between": (None, 0.27, 2.77, 4.20, 34),
        "within": (None, 2.89, -104.95, 11.63, 110),
    },
    "dffr": {
        "overall": (-0.31, 1.40, -4.34, 2.59, 3740),
        "between": (None, 0.0, -0.31, -0.31, 34),
        "within": (None, 1.40, -4.34, 2.59, 110),
    },
    "dGTE": {
        "overall": (4.60, 2.63, -1.38, 11.98, 3740),
        "between": (None, 0.0, 4.60, 4.60, 34),
        "within": (None, 2.63, -1.38, 11.98, 110),
    },
    "unexpinfl": {
        "overall": (-0.34, 1.42, -6.27, 5.49, 3740),
        "between": (None, 0.23, -0.80, 0.28, 34),
        "within": (None, 1.40, -5.83, 5.45, 110),
    },
    "union": {
        "overall": (0.47, 0.50, 0.0, 1.0, 3740),
        "between": (None, 0.51, 0.0, 1.0, 34),
        "within": (None, 0.0, 0.47, 0.47, 110),
    },
}

FIELDS = ("mean", "sd", "min", "max", "count")


@dataclass(frozen=True)
class Deviation:
    variable: str
    part: str
    field: str
    reference: float
    observed: float

    @property
    def difference(self) -> float:
        return self.observed - self.reference


def compare_table2(stats: SeriesStats, tol: float = 0.01) -> list[Deviation]:
    """Entries of ``stats`` that differ from the published row by more than ``tol``.

    Counts must match exactly.  Variables absent from the table give an
    empty list.
    """
    ref = TABLE2.get(stats.variable)
    if ref is None:
        return []
    out = []
    for part, observed in zip(("overall", "between", "within"), stats.rows()):
        for name, r, o in zip(FIELDS, ref[part], observed[1:]):
            if r is None:
                continue
            limit = 0 if name == "count" else tol + 1e-12
            if abs(o - r) > limit:
                out.append(Deviation(stats.variable, part, name, r, float(o)))
    return out


@dataclass(frozen=True)
class PatternCheck:
    contemporaneous_negative: bool
    contemporaneous_decreasing: bool
    fourth_lag_positive_lower_half: bool

    @property
    def all(self) -> bool:
        return (
            self.contemporaneous_negative
            and self.contemporaneous_decreasing
            and self.fourth_lag_positive_lower_half
        )


def pattern_check(table: CoefficientTable, inflation: str = "pi") -> PatternCheck:
    """Sign and monotonicity pattern of the inflation coefficients across quantiles.

    Contemporaneous effects negative and weakly decreasing in tau; the
    fourth lag positive on the lower half of the grid (tau < 0.5).
    """
    c0 = sorted(table.column(f"{inflation}_l0"), key=lambda r: r.tau)
    c4 = sorted(table.column(f"{inflation}_l4"), key=lambda r: r.tau)
    e0 = [r.estimate for r in c0]
    return PatternCheck(
        contemporaneous_negative=bool(e0) and all(e < 0 for e in e0),
        contemporaneous_decreasing=all(b <= a for a, b in zip(e0, e0[1:])),
        fourth_lag_positive_lower_half=bool(c4) and all(r.estimate > 0 for r in c4 if r.tau < 0.5),
    )
