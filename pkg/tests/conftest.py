import numpy as np
import pytest

from panelmmqr import mmqr
from panelmmqr.panel import PanelDataset, QuarterId, quarter_range

# Every MMQRFit built anywhere in the session records its affine-identity
# residual here; the acceptance suite checks the maximum at the end.
AFFINE_LOG: list[float] = []
ACCEPTANCE_LINES: list[str] = []

_orig_init = mmqr.MMQRFit.__init__


def _recording_init(self, *args, **kwargs):
    _orig_init(self, *args, **kwargs)
    AFFINE_LOG.append(self.affine_residual())


mmqr.MMQRFit.__init__ = _recording_init


def pytest_collection_modifyitems(items):
    # the affine-identity criterion audits fits from the whole session, so it runs last
    last = [it for it in items if "affine_identity_all_fits" in it.name]
    rest = [it for it in items if it not in last]
    items[:] = rest + last


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_levels_panel(n=6, T=24, seed=0, start=QuarterId(1990, 1)):
    """Panel of levels in the shape of the real inputs.

    ``ffr`` and ``gte`` are national (identical across units).
    """
    rng = np.random.default_rng(seed)
    units = tuple(f"S{i:02d}" for i in range(n))
    t = np.arange(T)
    gini = 0.45 + 0.01 * rng.normal(size=(n, 1)) + 0.0005 * t + 0.004 * rng.normal(size=(n, T))
    pi = 2.0 + 0.3 * rng.normal(size=(n, 1)) + np.cumsum(0.2 * rng.normal(size=(n, T)), axis=1)
    inc = 30_000 * np.exp(0.01 * t + 0.1 * rng.normal(size=(n, 1)) + 0.02 * rng.normal(size=(n, T)))
    ffr = np.tile(3.0 + np.cumsum(0.3 * rng.normal(size=T)), (n, 1))
    gte = np.tile(1_000 * np.exp(0.012 * t + 0.01 * rng.normal(size=T)), (n, 1))
    return PanelDataset(
        units,
        quarter_range(start, T),
        {"gini": gini, "pi": pi, "inc": inc, "ffr": ffr, "gte": gte},
    )


@pytest.fixture
def levels_panel():
    return make_levels_panel()


@pytest.fixture
def forecast_for(levels_panel):
    p = levels_panel
    rng = np.random.default_rng(11)
    origins = quarter_range(p.times[0].shift(-4), p.n_times)
    return {q: float(2.0 + 0.2 * rng.normal()) for q in origins}
