"""Panel quantile regression by the method of moments, with fixed effects."""

from .design import DesignMatrix, ModelSpec, build_design, preset, unexpected_inflation
from .errors import (
    DomainError,
    InferenceError,
    PanelMMQRError,
    ParseError,
    PositivityError,
    RankError,
    SchemaError,
)
from .inference import CoefficientTable, cluster_bootstrap, star
from .mmqr import MMQRFit, fit, fit_location, fit_scale, standardized_quantile
from .montecarlo import DGPSpec, coverage_experiment, recovery_experiment, simulate
from .panel import (
    PanelDataset,
    QuarterId,
    SeriesStats,
    describe,
    diff4,
    lag,
    quarterly_average_inflation,
    yoy_growth,
)

__version__ = "0.1.0"
