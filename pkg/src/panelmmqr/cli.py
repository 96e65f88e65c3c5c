"""Command-line interface: ``describe``, ``fit``, ``simulate`` and ``recover``.

Failures print one line ``error class=<class>: <message>`` on stderr and
exit with the class's code (parse 3, schema 4, rank 5, positivity 6,
inference 7, table2 8, io 9).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import fileio
from .design import (
    ModelSpec,
    apply_overrides,
    assemble,
    build_design,
    parse_grid,
    parse_key_values,
    preset,
)
from .errors import EXIT_CODES, ParseError, PanelMMQRError, SchemaError, Table2Mismatch
from .inference import bootstrap_design
from .mmqr import fit as mmqr_fit
from .montecarlo import DGPSpec, recovery_experiment, simulate
from .panel import PanelDataset, QuarterId, align_to, describe, quarterly_average_inflation
from .reference import TABLE2, compare_table2

log = logging.getLogger("panelmmqr")

OUT_ENV = "PANELMMQR_OUT"
TABLE2_ORDER = ("ineqgrowth", "pi", "incgrowth", "dffr", "dGTE", "unexpinfl", "union")
EMIT_CHOICES = ("coefficients", "plotdata", "fit_dump", "descriptive_stats")


def _out_dir(args) -> Path:
    out = Path(args.out or os.environ.get(OUT_ENV) or ".")
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise OSError(f"output directory {out} is not writable")
    return out


def _growth_overrides(pairs) -> dict[str, str]:
    out = {}
    for p in pairs or ():
        if "=" not in p:
            raise ParseError(f"--growth expects VAR=METHOD, got {p!r}")
        k, v = p.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_inputs(args) -> tuple[PanelDataset, dict[QuarterId, float] | None]:
    panel = fileio.read_panel(args.panel)
    if getattr(args, "monthly", None):
        units, times, values = quarterly_average_inflation(fileio.read_monthly(args.monthly))
        rows = {u: i for i, u in enumerate(units)}
        missing = [u for u in panel.units if u not in rows]
        if missing:
            raise SchemaError(f"monthly inflation file lacks unit(s) {missing}")
        grid = align_to(panel.times, times, values[[rows[u] for u in panel.units]])
        panel = panel.with_series("pi", grid)
    forecast = fileio.read_forecast(args.forecast) if getattr(args, "forecast", None) else None
    return panel, forecast


def _describe_all(panel: PanelDataset, forecast, growth, variables=None):
    full = assemble(panel, growth, forecast)
    names = variables or [v for v in TABLE2_ORDER if v in full] + [
        v for v in full.series if v not in TABLE2_ORDER
    ]
    return [describe(full, v) for v in names]


def write_describe(path: Path, stats) -> None:
    rows = []
    for s in stats:
        for part, mean, sd, lo, hi, count in s.rows():
            rows.append((s.variable, part, mean, sd, lo, hi, count))
    fileio.write_table(
        path,
        ("variable", "part", "mean", "std_dev", "min", "max", "N_n_Tbar"),
        rows,
        comments=(
            "std_dev denominators: overall N-1, between n-1 (unit means), within N-1",
            "within values are x_it - mean_i + grand mean; count is N (overall), n (between), T-bar (within)",
        ),
    )


def _strict_table2(out: Path, stats) -> None:
    devs = [d for s in stats for d in compare_table2(s)]
    fileio.write_table(
        out / "table2_check.csv",
        ("variable", "part", "field", "reference", "observed", "difference"),
        [(d.variable, d.part, d.field, d.reference, d.observed, d.difference) for d in devs],
    )
    if devs:
        worst = max(devs, key=lambda d: abs(d.difference))
        raise Table2Mismatch(
            f"{len(devs)} entries differ from the published descriptive statistics by more than 0.01; "
            f"largest {worst.variable}/{worst.part}/{worst.field}: {worst.observed!r} vs {worst.reference!r}"
        )


def cmd_describe(args) -> int:
    panel, forecast = load_inputs(args)
    out = _out_dir(args)
    variables = [v.strip() for v in args.variables.split(",")] if args.variables else None
    stats = _describe_all(panel, forecast, _growth_overrides(args.growth), variables)
    write_describe(out / "descriptive_stats.csv", stats)
    if args.strict_table2:
        _strict_table2(out, stats)
    return 0


def build_spec(args) -> ModelSpec:
    try:
        items = {}
        if args.spec:
            items = parse_key_values(Path(args.spec).read_text(encoding="utf-8"), args.spec)
        name = args.preset or items.get("preset")
        spec = apply_overrides(preset(name) if name else ModelSpec(), items)
        items = {}
        if args.lags is not None:
            items["lags"] = args.lags
        if args.controls is not None:
            items["controls"] = args.controls
        if args.inflation is not None:
            items["inflation"] = args.inflation
        if args.grid is not None:
            items["grid"] = args.grid
        if args.bootstrap is not None:
            items["bootstrap"] = str(args.bootstrap)
        if args.seed is not None:
            items["seed"] = str(args.seed)
        for k, v in _growth_overrides(args.growth).items():
            items[f"growth.{k}"] = v
        return apply_overrides(spec, items)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _lag_of(column: str) -> int | None:
    head, _, tail = column.rpartition("_l")
    return int(tail) if head and tail.isdigit() else None


def cmd_fit(args) -> int:
    spec = build_spec(args)
    panel, forecast = load_inputs(args)
    if spec.inflation_kind == "unexpected" and forecast is None and "unexpinfl" not in panel:
        raise SchemaError("unexpected-inflation specifications need --forecast or an 'unexpinfl' column")
    out = _out_dir(args)
    emit = set(args.emit.split(",")) if args.emit else {"coefficients", "plotdata", "fit_dump"}
    unknown = emit - set(EMIT_CHOICES)
    if unknown:
        raise ParseError(f"unknown --emit item(s) {sorted(unknown)}")

    if args.strict_table2 or "descriptive_stats" in emit:
        stats = _describe_all(panel, forecast, spec.growth_methods)
        write_describe(out / "descriptive_stats.csv", stats)
        if args.strict_table2:
            _strict_table2(out, stats)

    design = build_design(panel, spec, forecast)
    log.info("design: %d units x %d quarters, columns %s", design.n_units, design.n_times, design.columns)
    point = mmqr_fit(design, spec.quantile_grid)
    table = bootstrap_design(
        design, spec.quantile_grid, spec.bootstrap_reps, spec.rng_seed, args.workers, point=point
    )

    if "coefficients" in emit:
        fileio.write_table(
            out / "coefficients.csv",
            table.HEADER,
            [(r.tau, r.column, r.estimate, r.std_error, r.p_value, r.stars, r.B) for r in table.rows],
            comments=(
                f"unit bootstrap: requested {table.requested}, discarded {table.discarded}",
                "p_value: two-sided normal approximation; stars *** p<0.01, ** p<0.05, * p<0.10",
            ),
        )
    if "plotdata" in emit:
        fileio.write_table(
            out / "plotdata.csv",
            ("tau", "column", "lag", "estimate", "stars"),
            [(r.tau, r.column, _lag_of(r.column), r.estimate, r.stars) for r in table.rows],
        )
    if "fit_dump" in emit:
        fileio.write_table(out / "fit_dump.csv", ("parameter", "key", "value"), point.dump_rows())
    with open(out / "metadata.txt", "w", encoding="utf-8") as fh:
        fh.write(spec.to_config())
        fh.write(f"design_quarters = {design.times[0]}..{design.times[-1]}\n")
        fh.write(f"design_rows = {design.y.size}\n")
        fh.write("units = " + ",".join(panel.units) + "\n")
    return 0


_DGP_KEYS = {
    "n": int, "T": int, "alpha_sd": float, "x_low": float, "x_high": float,
    "innovation": str, "df": float, "seed": int,
}


def dgp_from_config(text: str, source: str = "<dgp>") -> DGPSpec:
    items = parse_key_values(text, source)
    kw: dict = {}
    try:
        for key, value in items.items():
            if key in _DGP_KEYS:
                kw[key] = _DGP_KEYS[key](value)
            elif key in ("beta", "gamma", "alpha", "delta"):
                kw[key] = tuple(float(v) for v in value.split(","))
            elif key == "delta_range":
                lo, hi = value.split(",")
                kw[key] = (float(lo), float(hi))
            elif key == "columns":
                kw[key] = tuple(v.strip() for v in value.split(","))
            elif key == "start":
                kw[key] = QuarterId.parse(value)
            else:
                raise ParseError(f"unknown DGP key {key!r}", source)
        return DGPSpec(**kw)
    except ValueError as exc:
        raise ParseError(str(exc), source) from exc


def _load_dgp(args) -> DGPSpec:
    text = Path(args.dgp).read_text(encoding="utf-8") if args.dgp else ""
    lines = [text]
    for key in ("n", "T", "seed"):
        v = getattr(args, key, None)
        if v is not None:
            lines.append(f"{key} = {v}")
    return dgp_from_config("\n".join(lines), args.dgp or "<dgp>")


def cmd_simulate(args) -> int:
    dgp = _load_dgp(args)
    out = _out_dir(args)
    panel, truth = simulate(dgp)
    fileio.write_panel(out / "panel.csv", panel)
    rows = [("beta", c, b) for c, b in zip(dgp.columns, dgp.beta)]
    rows += [("gamma", c, g) for c, g in zip(dgp.columns, dgp.gamma)]
    rows += [("alpha", u, a) for u, a in zip(panel.units, truth.alpha)]
    rows += [("delta", u, d) for u, d in zip(panel.units, truth.delta)]
    rows += [("innovation", dgp.innovation, dgp.df if dgp.innovation == "t" else None)]
    fileio.write_table(out / "truth.csv", ("parameter", "key", "value"), rows)
    return 0


def cmd_recover(args) -> int:
    dgp = _load_dgp(args)
    out = _out_dir(args)
    grid = parse_grid(args.grid) if args.grid else None
    rep = recovery_experiment(dgp, args.replications, grid, args.workers)
    fileio.write_table(
        out / "recovery.csv",
        rep.HEADER,
        [(r.tau, r.column, r.truth, r.mean_estimate, r.bias, r.mc_se, r.rmse, r.failures) for r in rep.rows],
        comments=(f"replications {rep.replications}, failed fits {rep.failures}",),
    )
    fileio.write_table(
        out / "recovery_profile.csv",
        rep.PROFILE_HEADER,
        [(p.column, p.truth, p.mean_spread, p.mc_se, p.flat) for p in rep.profile],
        comments=("spread = coefficient at last grid quantile minus first; flat when |mean| < 3 MC s.e.",),
    )
    return 0


def _add_io(p, forecast=True):
    p.add_argument("--panel", required=True, help="long-format panel file")
    p.add_argument("--monthly", help="monthly 12-month inflation rates (builds 'pi')")
    if forecast:
        p.add_argument("--forecast", help="one-year-ahead forecasts by origin quarter")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
    p.add_argument("--growth", action="append", metavar="VAR=METHOD",
                   help="growth method per variable: logdiff (default) or pct")
    p.add_argument("--strict-table2", action="store_true",
                   help="fail when descriptive statistics drift from the published values by >0.01")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="panelmmqr", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("describe", help="overall/between/within descriptive statistics")
    _add_io(p)
    p.add_argument("--variables", help="comma-separated variables (default: all known)")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("fit", help="quantile coefficients with unit-bootstrap inference")
    _add_io(p)
    p.add_argument("--preset", choices=("fig5", "fig6", "fig7", "fig8"))
    p.add_argument("--spec", help="key = value specification file")
    p.add_argument("--lags", help="inflation lags, e.g. 0,1,2,3,4 or 0-4")
    p.add_argument("--controls", choices=("on", "off"))
    p.add_argument("--inflation", choices=("actual", "unexpected"))
    p.add_argument("--grid", help="START:STOP:STEP or comma list of quantiles")
    p.add_argument("--bootstrap", type=int, help="bootstrap replicates (default 500)")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--emit", help="comma list from " + ",".join(EMIT_CHOICES))
    p.set_defaults(func=cmd_fit)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "simulate a panel from a DGP file"),
        ("recover", cmd_recover, "Monte Carlo recovery report"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--dgp", help="key = value DGP file")
        p.add_argument("--n", type=int)
        p.add_argument("--T", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        if name == "recover":
            p.add_argument("--replications", type=int, default=200)
            p.add_argument("--grid", help="START:STOP:STEP or comma list")
            p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except PanelMMQRError as exc:
        print(f"error class={exc.error_class}: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.error_class, 1)
    except OSError as exc:
        print(f"error class=io: {exc}", file=sys.stderr)
        return EXIT_CODES["io"]


if __name__ == "__main__":
    sys.exit(main())
