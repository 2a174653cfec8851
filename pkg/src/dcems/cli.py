"""Command-line entry point.

Three subcommands: ``simulate`` runs configurations of one scenario and
writes settlement reports, ``sweep`` drives the sensitivity studies, and
``synth`` writes seeded synthetic trace files. Exit codes: 0 success,
1 validation or input error, 2 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import runner, sensitivity, traceio
from .horizon import DispatchError
from .lp import LpError
from .mpc import persistence_forecast
from .types import TimeGrid

USAGE_EXIT = 64
_MODE_CHOICES = runner.MODES + ("all",)
_MARKET_CHOICES = runner.MARKETS + ("both",)


class _Parser(argparse.ArgumentParser):
    """argparse with the conventional 64 exit for bad usage."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dcems", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="dispatch and settle one scenario")
    sim.add_argument("--config", required=True, help="scenario TOML file")
    sim.add_argument("--market", choices=_MARKET_CHOICES, default="both")
    sim.add_argument("--mode", choices=_MODE_CHOICES, default="all")
    sim.add_argument("--out", help="settlement report output path")
    sim.add_argument(
        "--format", choices=traceio.RESULT_FORMATS, default=None,
        help="report format (default: from --out suffix, else csv)",
    )
    sim.add_argument(
        "--forecast", choices=("perfect", "persistence"), default="perfect",
        help="forecast model for the optimizer",
    )
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a sensitivity sweep")
    sw.add_argument("--config", required=True, help="scenario TOML file")
    sw.add_argument("--sweep", choices=("deferrable", "ratio"), required=True)
    sw.add_argument("--points", required=True, help="comma-separated sweep values")
    sw.add_argument("--out", required=True, help="output CSV path prefix")
    sw.set_defaults(func=cmd_sweep)

    syn = sub.add_parser("synth", help="write seeded synthetic traces")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--profile", choices=traceio.SYNTH_PROFILES, required=True)
    syn.add_argument("--out-dir", required=True)
    syn.add_argument("--config", help="scenario TOML supplying the grid (optional)")
    syn.add_argument("--deferrable-fraction", type=float, default=0.40)
    syn.add_argument("--workload-shape", choices=("diurnal", "flat"), default="diurnal")
    syn.add_argument("--max-work-per-interval", type=float, default=40_000.0)
    syn.add_argument("--nonnegative-prices", action="store_true")
    syn.set_defaults(func=cmd_synth)
    return parser


def _summary_line(report) -> str:
    parts = [
        f"{report.market:9s} {report.configuration:14s}",
        f"net_cost=${report.net_cost_usd:,.2f}",
        f"peak={report.peak_import_kw:,.1f} kW",
    ]
    if report.pct_savings_vs_baseline is not None:
        parts.append(f"savings={report.pct_savings_vs_baseline:.2f}%")
    return "  ".join(parts)


def _comparison_table(reports) -> str:
    header = (
        f"{'market':9s} {'configuration':14s} {'import MWh':>11s} {'export MWh':>11s} "
        f"{'self MWh':>10s} {'peak kW':>10s} {'net cost $':>14s} {'savings %':>10s}"
    )
    lines = [header, "-" * len(header)]
    for r in reports:
        pct = (
            ""
            if r.pct_savings_vs_baseline is None
            else f"{r.pct_savings_vs_baseline:10.2f}"
        )
        lines.append(
            f"{r.market:9s} {r.configuration:14s} {r.imported_mwh:11.2f} "
            f"{r.exported_mwh:11.2f} {r.self_consumed_mwh:10.2f} "
            f"{r.peak_import_kw:10.1f} {r.net_cost_usd:14.2f} {pct:>10s}"
        )
    return "\n".join(lines)


def cmd_simulate(args) -> int:
    scenario = traceio.load_scenario(args.config)
    traces = scenario.load_traces()
    markets = runner.MARKETS if args.market == "both" else (args.market,)
    reports = []
    for market in markets:
        if args.mode == "all":
            reports.extend(
                runner.run_comparison(
                    scenario.plant,
                    scenario.curve,
                    scenario.grid,
                    traces,
                    market,
                    demand_charge_usd_per_kw=scenario.demand_charge_usd_per_kw,
                    amortized_cost_usd=scenario.amortized_cost_usd,
                    policy=scenario.policy,
                )
            )
        else:
            tariff = runner.build_tariff(
                traces,
                market,
                demand_charge_usd_per_kw=scenario.demand_charge_usd_per_kw,
            )
            forecaster = None
            if args.mode == "optimal" and args.forecast == "persistence":
                forecaster = persistence_forecast(traces, tariff)
            timeline = runner.run_configuration(
                scenario.plant,
                scenario.curve,
                scenario.grid,
                traces,
                tariff,
                args.mode,
                policy=scenario.policy,
                forecaster=forecaster,
            )
            reports.append(runner.settle(timeline, tariff, scenario.grid, args.mode))

    if args.mode == "all":
        print(_comparison_table(reports))
    else:
        for report in reports:
            print(_summary_line(report))
    if args.out:
        fmt = args.format
        if fmt is None:
            fmt = "json" if Path(args.out).suffix.lower() == ".json" else "csv"
        traceio.write_results(reports, args.out, fmt)
        print(f"wrote {len(reports)} report(s) to {args.out}")
    return 0


def _usage_error(message: str):
    print(f"dcems sweep: error: {message}", file=sys.stderr)
    raise SystemExit(USAGE_EXIT)


def _parse_points(text: str) -> list:
    points = []
    for cell in text.split(","):
        cell = cell.strip()
        if not cell:
            continue
        try:
            points.append(float(cell))
        except ValueError:
            _usage_error(f"bad sweep point {cell!r}")
    if not points:
        _usage_error("at least one sweep point is required")
    return points


def cmd_sweep(args) -> int:
    points = _parse_points(args.points)
    scenario = traceio.load_scenario(args.config)
    traces = scenario.load_traces()
    common = dict(
        demand_charge_usd_per_kw=scenario.demand_charge_usd_per_kw,
        policy=scenario.policy,
    )
    if args.sweep == "deferrable":
        series = sensitivity.sweep_deferrable_fraction(
            scenario.plant, scenario.curve, scenario.grid, traces, points, **common
        )
    else:
        series = sensitivity.sweep_capacity_ratio(
            scenario.plant, scenario.curve, scenario.grid, traces, points, **common
        )
    out = Path(args.out)
    for baseline, suffix in (("no-colocation", "vs_no_colocation"), ("colocation", "vs_colocation")):
        path = out.parent / f"{out.stem}_{suffix}.csv" if out.suffix else Path(f"{out}_{suffix}.csv")
        path.write_text(sensitivity.sweep_to_csv(series, baseline=baseline))
        print(f"wrote {len(series)}-point series to {path}")
    return 0


def cmd_synth(args) -> int:
    if args.config:
        grid = traceio.load_scenario(args.config).grid
    else:
        grid = TimeGrid()
    traces = traceio.synth_traces(
        seed=args.seed,
        grid=grid,
        profile=args.profile,
        deferrable_fraction=args.deferrable_fraction,
        workload_shape=args.workload_shape,
        max_work_per_interval=args.max_work_per_interval,
        nonnegative_prices=args.nonnegative_prices,
    )
    written = traceio.write_traces(traces, grid, args.out_dir)
    for kind in sorted(written):
        print(f"wrote {kind} trace to {written[kind]}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # argparse funnels usage errors through here
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    except (DispatchError, LpError) as exc:
        print(f"dcems: solver error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"dcems: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
