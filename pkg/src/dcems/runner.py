"""End-to-end orchestration: dispatch a month, verify it, settle it.

This is the one place the three operating configurations are built and
compared. Every timeline produced here is re-checked against the plant
physics before settlement; a dispatch that violates its own constraints
is a bug, not a result, so it raises instead of settling.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import baselines
from .curve import ProcessingCurve
from .horizon import DispatchError
from .mpc import MpcPolicy, perfect_foresight, run_mpc
from .settlement import (
    SettlementReport,
    compare_configurations,
    default_amortized_cost,
    settle_retail,
    settle_wholesale,
)
from .types import (
    DispatchTimeline,
    PlantConfig,
    RetailTariff,
    TimeGrid,
    TraceSet,
    WholesaleTariff,
)
from .validation import ConfigError, check_timeline

MARKETS = ("wholesale", "retail")
MODES = ("no-colocation", "colocation", "optimal")


def build_tariff(traces: TraceSet, market: str, demand_charge_usd_per_kw: float = 0.0):
    """Assemble the tariff for ``market`` from the price series in ``traces``."""
    if market == "wholesale":
        if traces.lmp_usd_per_kwh is None:
            raise ConfigError("wholesale market requires an lmp trace")
        return WholesaleTariff(np.asarray(traces.lmp_usd_per_kwh, dtype=float))
    if market == "retail":
        if traces.import_rate_usd_per_kwh is None or traces.export_rate_usd_per_kwh is None:
            raise ConfigError("retail market requires import_rate and export_rate traces")
        return RetailTariff(
            import_rate_usd_per_kwh=np.asarray(traces.import_rate_usd_per_kwh, dtype=float),
            export_rate_usd_per_kwh=np.asarray(traces.export_rate_usd_per_kwh, dtype=float),
            demand_charge_usd_per_kw=demand_charge_usd_per_kw,
        )
    raise ValueError(f"unknown market {market!r}; choose from {MARKETS}")


def run_configuration(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    tariff,
    mode: str,
    policy: Optional[MpcPolicy] = None,
    forecaster=None,
) -> DispatchTimeline:
    """Dispatch one month under ``mode`` and verify the result.

    ``no-colocation`` runs the grid-only baseline, ``colocation`` the
    greedy self-consumption baseline, ``optimal`` the rolling-horizon
    optimizer (perfect foresight unless a forecaster is supplied).
    """
    if mode == "no-colocation":
        timeline = baselines.simulate_no_colocation(plant, curve, grid, traces)
        check_traces = baselines.zero_renewable(traces)
    elif mode == "colocation":
        timeline = baselines.simulate_colocation_greedy(plant, curve, grid, traces)
        check_traces = traces
    elif mode == "optimal":
        if forecaster is None:
            forecaster = perfect_foresight(traces, tariff)
        timeline = run_mpc(
            plant, curve, grid, traces, tariff, forecaster=forecaster, policy=policy
        )
        check_traces = traces
    else:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")

    violations = check_timeline(timeline, plant, grid, curve, check_traces)
    if violations:
        raise DispatchError(
            f"{mode} dispatch violated plant constraints:\n" + "\n".join(violations)
        )
    return timeline


def settle(timeline: DispatchTimeline, tariff, grid: TimeGrid, mode: str) -> SettlementReport:
    if isinstance(tariff, RetailTariff):
        return settle_retail(timeline, tariff, grid, configuration=mode)
    return settle_wholesale(timeline, tariff, grid, configuration=mode)


def run_comparison(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    market: str,
    demand_charge_usd_per_kw: float = 0.0,
    amortized_cost_usd: Optional[float] = None,
    policy: Optional[MpcPolicy] = None,
    forecaster=None,
    modes: tuple = MODES,
) -> list:
    """Run the requested configurations through one market and compare them.

    Returns settlement reports with savings measured against the
    no-colocation baseline (which is always run, whether requested or
    not, since the comparison needs it).
    """
    tariff = build_tariff(traces, market, demand_charge_usd_per_kw)
    if amortized_cost_usd is None:
        amortized_cost_usd = default_amortized_cost(plant.renewable_capacity_kw)
    run_modes = list(modes)
    if "no-colocation" not in run_modes:
        run_modes.insert(0, "no-colocation")
    reports = []
    for mode in run_modes:
        timeline = run_configuration(
            plant, curve, grid, traces, tariff, mode, policy=policy, forecaster=forecaster
        )
        reports.append(settle(timeline, tariff, grid, mode))
    compared = compare_configurations(reports, amortized_cost_usd)
    wanted = set(modes)
    return [r for r in compared if r.configuration in wanted]
