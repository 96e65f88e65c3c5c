import numpy as np
import pytest

from panelmmqr.design import (
    ModelSpec,
    assemble,
    build_design,
    parse_grid,
    preset,
    quantile_grid,
    spec_from_config,
    unexpected_inflation,
)
from panelmmqr.errors import ParseError, RankError, SchemaError
from panelmmqr.panel import PanelDataset, QuarterId, quarter_range

from conftest import make_levels_panel


def test_default_grid_is_every_fifth_percentile():
    g = quantile_grid()
    assert len(g) == 19
    assert g[0] == 0.05 and g[-1] == 0.95 and g[9] == 0.5
    assert parse_grid("0.1:0.9:0.1") == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    assert parse_grid("0.25,0.5") == (0.25, 0.5)


@pytest.mark.parametrize(
    "fig,kind,controls",
    [("fig5", "actual", False), ("fig6", "actual", True), ("fig7", "unexpected", False), ("fig8", "unexpected", True)],
)
def test_presets(fig, kind, controls):
    s = preset(fig)
    assert s.inflation_kind == kind
    assert s.include_controls is controls
    assert s.lag_set == (0, 1, 2, 3, 4)
    assert s.quantile_grid == quantile_grid()


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec(lag_set=())
    with pytest.raises(ValueError):
        ModelSpec(quantile_grid=(0.5, 0.4))
    with pytest.raises(ValueError):
        ModelSpec(quantile_grid=(0.0, 0.5))
    with pytest.raises(ValueError):
        ModelSpec(lag_set=(5,))


def test_spec_config_round_trip():
    s = ModelSpec(inflation_kind="unexpected", lag_set=(1, 4), include_controls=True,
                  quantile_grid=(0.1, 0.5), bootstrap_reps=7, rng_seed=3, growth_methods={"inc": "pct"})
    assert spec_from_config(s.to_config()) == s


def test_preset_overridable_from_config():
    s = spec_from_config("preset = fig6\nlags = 0\nbootstrap = 10 # fewer\n")
    assert s.include_controls and s.lag_set == (0,) and s.bootstrap_reps == 10
    with pytest.raises(ParseError):
        spec_from_config("lags 0\n")


def test_unexpected_inflation_examples():
    times = quarter_range(QuarterId(1990, 1), 2)
    fc = {QuarterId(1989, 1): 3.0, QuarterId(1989, 2): 3.0}
    u = unexpected_inflation([[3.0, 2.5]], times, fc)
    np.testing.assert_allclose(u, [[0.0, -0.5]])


def test_unexpected_inflation_uses_forecast_from_a_year_earlier():
    times = quarter_range(QuarterId(1990, 1), 4)
    fc = {QuarterId(1989, k): float(k) for k in (1, 2, 3, 4)}
    u = unexpected_inflation(np.zeros((1, 4)), times, fc)
    np.testing.assert_array_equal(u, [[-1.0, -2.0, -3.0, -4.0]])


def test_unexpected_inflation_gap_is_an_error():
    times = quarter_range(QuarterId(1990, 1), 3)
    fc = {QuarterId(1989, 1): 1.0, QuarterId(1989, 3): 1.0}
    with pytest.raises(SchemaError, match="1989Q2"):
        unexpected_inflation(np.zeros((1, 3)), times, fc)


def test_unexpected_plus_forecast_reconstructs_actual(levels_panel, forecast_for):
    p = levels_panel
    u = unexpected_inflation(p["pi"], p.times, forecast_for)
    shifted = np.array([forecast_for[t.shift(-4)] for t in p.times])
    ok = ~np.isnan(u)
    # exact up to the rounding of one subtraction and one addition
    scale = np.abs(p["pi"][ok]) + np.abs(np.broadcast_to(shifted, u.shape)[ok])
    assert (np.abs((u + shifted)[ok] - p["pi"][ok]) <= 4 * np.finfo(float).eps * scale).all()


def test_column_counts_and_rows(levels_panel):
    d = build_design(levels_panel, ModelSpec(lag_set=(0,), include_controls=False))
    assert d.columns == ("pi_l0", "incgrowth")
    assert d.X.shape == (6 * (24 - 4), 2)
    d = build_design(levels_panel, ModelSpec(lag_set=(0, 1, 2, 3, 4), include_controls=True))
    assert d.columns == ("pi_l0", "pi_l1", "pi_l2", "pi_l3", "pi_l4", "incgrowth", "dffr", "dGTE")
    assert d.X.shape == (6 * 20, 8)


def test_full_sample_dimensions_give_3604_rows():
    # 34 states x 110 quarters of already-transformed series, four lags of inflation
    rng = np.random.default_rng(0)
    n, T = 34, 110
    times = quarter_range(QuarterId(1990, 1), T)
    series = {v: rng.normal(size=(n, T)) for v in ("ineqgrowth", "pi", "incgrowth")}
    p = PanelDataset(tuple(f"S{i}" for i in range(n)), times, series)
    d = build_design(p, preset("fig5"))
    assert d.y.size == 34 * 106 == 3604
    assert d.times[0] == QuarterId(1991, 1)


def test_lag_zero_column_is_unshifted(levels_panel):
    d = build_design(levels_panel, ModelSpec(lag_set=(0,)))
    kept = levels_panel["pi"][:, 4:]
    np.testing.assert_array_equal(d.X[:, 0], kept.reshape(-1))


def test_lag_columns_are_shifted(levels_panel):
    d = build_design(levels_panel, ModelSpec(lag_set=(0, 3)))
    pi = levels_panel["pi"]
    np.testing.assert_array_equal(d.X[:, 1].reshape(6, 20), pi[:, 1:21])


def test_rows_balanced_and_grouped(levels_panel):
    d = build_design(levels_panel, preset("fig6"))
    counts = np.bincount(d.unit_index)
    assert (counts == d.n_times).all()
    assert d.time_index[: d.n_times] == d.times


def test_build_design_deterministic(levels_panel):
    a = build_design(levels_panel, preset("fig6"))
    b = build_design(levels_panel, preset("fig6"))
    assert a.X.tobytes() == b.X.tobytes() and a.y.tobytes() == b.y.tobytes()


def test_unexpected_design_trims_for_forecast_start(levels_panel):
    p = levels_panel
    fc = {q: 2.0 for q in quarter_range(p.times[0], p.n_times)}  # starts with the panel
    d = build_design(p, preset("fig7"), forecast=fc)
    # unexpected inflation exists from quarter 4; its fourth lag from quarter 8
    assert d.times[0] == p.times[8]
    with pytest.raises(SchemaError, match="forecast"):
        build_design(p, preset("fig7"))


def test_missing_variable_and_zero_within_variance(levels_panel):
    p = levels_panel
    no_inc = PanelDataset(p.units, p.times, {k: v for k, v in p.series.items() if k != "inc"})
    with pytest.raises(SchemaError, match="inc"):
        build_design(no_inc, ModelSpec(lag_set=(0,)))
    flat = p.with_series("pi", np.tile(np.arange(6.0)[:, None], (1, p.n_times)))
    with pytest.raises(RankError, match="pi_l0"):
        build_design(flat, ModelSpec(lag_set=(0,)))


def test_interior_missing_is_rejected(levels_panel):
    pi = levels_panel["pi"].copy()
    pi[2, 15] = np.nan
    with pytest.raises(SchemaError, match="unbalanced"):
        build_design(levels_panel.with_series("pi", pi), ModelSpec(lag_set=(0,)))


def test_growth_method_configurable(levels_panel):
    a = build_design(levels_panel, ModelSpec(lag_set=(0,)))
    b = build_design(levels_panel, ModelSpec(lag_set=(0,), growth_methods={"inc": "pct"}))
    assert not np.array_equal(a.X[:, 1], b.X[:, 1])
    np.testing.assert_array_equal(a.X[:, 0], b.X[:, 0])


def test_assemble_adds_table2_variables(levels_panel, forecast_for):
    full = assemble(levels_panel, forecast=forecast_for)
    for v in ("ineqgrowth", "incgrowth", "dffr", "dGTE", "unexpinfl"):
        assert v in full
    assert "unexpinfl" not in assemble(levels_panel)


def test_design_select_units_relabels_duplicates(levels_panel):
    d = build_design(make_levels_panel(n=4), ModelSpec(lag_set=(0,)))
    s = d.select_units([1, 1, 3, 0])
    assert s.units == ("S01", "S01#1", "S03", "S00")
    np.testing.assert_array_equal(s.y[: d.n_times], d.y[d.n_times: 2 * d.n_times])
