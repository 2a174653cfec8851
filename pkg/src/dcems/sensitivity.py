"""Sensitivity sweeps: deferrable fraction and renewable-to-DC capacity ratio.

Each sweep point reruns the full three-configuration month under both
markets and records the optimizer's percentage savings against each
baseline. Points run sequentially in input order; a sweep is a study
artifact and determinism beats speed at this scale.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .curve import ProcessingCurve
from .horizon import DispatchError, InfeasibleHorizon
from .lp import LpError
from .mpc import MpcPolicy
from .runner import run_comparison
from .types import PlantConfig, TimeGrid, TraceSet, WorkloadTrace
from .validation import ConfigError

SWEEP_BASELINES = ("no-colocation", "colocation")


def resplit_deferrable(traces: TraceSet, grid: TimeGrid, fraction: float) -> TraceSet:
    """Re-divide the same total work into rigid and flexible parts.

    The per-interval total is reconstructed by spreading each horizon's
    flexible work evenly over its intervals, then split again so that
    ``fraction`` of every interval's work becomes deferrable. Total work
    per horizon is preserved bit-for-bit in the sum sense.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must lie in [0, 1], got {fraction}")
    rigid = np.asarray(traces.workload.nondeferrable, dtype=float)
    flex = np.asarray(traces.workload.deferrable_per_horizon, dtype=float)
    H = grid.horizon_intervals
    total = rigid + np.repeat(flex / H, H)
    new_rigid = (1.0 - fraction) * total
    new_flex = fraction * np.add.reduceat(total, np.arange(0, len(total), H))
    return replace(traces, workload=WorkloadTrace(new_rigid, new_flex))


def scale_plant(plant: PlantConfig, c: float) -> PlantConfig:
    """Multiply every power rating by ``c`` (infinite limits stay infinite)."""
    return PlantConfig(
        dc_capacity_kw=c * plant.dc_capacity_kw,
        renewable_capacity_kw=c * plant.renewable_capacity_kw,
        dc_power_min_kw=c * plant.dc_power_min_kw,
        dc_power_max_kw=None if plant.dc_power_max_kw is None else c * plant.dc_power_max_kw,
        import_max_kw=c * plant.import_max_kw,
        export_max_kw=c * plant.export_max_kw,
        net_lower_kw=None if plant.net_lower_kw is None else c * plant.net_lower_kw,
        net_upper_kw=None if plant.net_upper_kw is None else c * plant.net_upper_kw,
    )


def scale_curve(curve: ProcessingCurve, c: float) -> ProcessingCurve:
    """Scale both axes of the power-to-compute curve; slopes are unchanged."""
    points = [(0.0, 0.0)]
    points += [(c * seg.end_kw, c * float(curve.rate(seg.end_kw))) for seg in curve.segments]
    return ProcessingCurve.from_breakpoints(points)


def scale_traces(traces: TraceSet, c: float) -> TraceSet:
    """Scale work quantities by ``c``; capacity factors and prices are ratios
    and per-kWh figures, so they stay put."""
    return replace(
        traces,
        workload=WorkloadTrace(
            c * np.asarray(traces.workload.nondeferrable, dtype=float),
            c * np.asarray(traces.workload.deferrable_per_horizon, dtype=float),
        ),
    )


@dataclass(frozen=True)
class MarketCosts:
    """Net cost of each configuration under one market, in USD."""

    no_colocation: float
    colocation: float
    optimal: float

    def savings_pct_vs(self, baseline: str) -> Optional[float]:
        if baseline == "no-colocation":
            base = self.no_colocation
        elif baseline == "colocation":
            base = self.colocation
        else:
            raise ValueError(f"unknown baseline {baseline!r}; choose from {SWEEP_BASELINES}")
        if base == 0.0:
            return None
        return 100.0 * (base - self.optimal) / base


@dataclass(frozen=True)
class SweepPoint:
    """One sweep abscissa with per-market costs; ``None`` marks a gap point
    (that point's month was infeasible)."""

    x: float
    wholesale: Optional[MarketCosts]
    retail: Optional[MarketCosts]


def _market_costs(
    plant, curve, grid, traces, market, demand_charge, policy
) -> Optional[MarketCosts]:
    try:
        reports = run_comparison(
            plant,
            curve,
            grid,
            traces,
            market,
            demand_charge_usd_per_kw=demand_charge if market == "retail" else 0.0,
            policy=policy,
        )
    except (ConfigError, DispatchError, InfeasibleHorizon, LpError):
        return None
    by_mode = {r.configuration: r.net_cost_usd for r in reports}
    return MarketCosts(
        no_colocation=by_mode["no-colocation"],
        colocation=by_mode["colocation"],
        optimal=by_mode["optimal"],
    )


def _sweep_point(
    x, plant, curve, grid, traces, demand_charge, policy
) -> SweepPoint:
    kinds = (
        ("wholesale", traces.lmp_usd_per_kwh is not None),
        (
            "retail",
            traces.import_rate_usd_per_kwh is not None
            and traces.export_rate_usd_per_kwh is not None,
        ),
    )
    costs = {}
    for market, available in kinds:
        costs[market] = (
            _market_costs(plant, curve, grid, traces, market, demand_charge, policy)
            if available
            else None
        )
    return SweepPoint(x=x, wholesale=costs["wholesale"], retail=costs["retail"])


def sweep_deferrable_fraction(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    fractions: Sequence[float],
    demand_charge_usd_per_kw: float = 0.0,
    policy: Optional[MpcPolicy] = None,
) -> list:
    """Rerun the month at each deferrable fraction, total work held fixed."""
    for f in fractions:
        if not 0.0 <= f <= 1.0:
            raise ValueError(f"fractions must lie in [0, 1], got {f}")
    points = []
    for f in fractions:
        resplit = resplit_deferrable(traces, grid, f)
        points.append(
            _sweep_point(f, plant, curve, grid, resplit, demand_charge_usd_per_kw, policy)
        )
    return points


def sweep_capacity_ratio(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    ratios: Sequence[float],
    demand_charge_usd_per_kw: float = 0.0,
    policy: Optional[MpcPolicy] = None,
) -> list:
    """Rerun the month with the renewable plant resized to ratio x DC capacity."""
    for r in ratios:
        if r <= 0.0:
            raise ValueError(f"ratios must be positive, got {r}")
    points = []
    for r in ratios:
        sized = replace(plant, renewable_capacity_kw=r * plant.dc_capacity_kw)
        points.append(
            _sweep_point(r, sized, curve, grid, traces, demand_charge_usd_per_kw, policy)
        )
    return points


def sweep_to_csv(points: Sequence[SweepPoint], baseline: str = "no-colocation") -> str:
    """Figure-ready CSV with the optimizer's savings against one baseline."""
    if baseline not in SWEEP_BASELINES:
        raise ValueError(f"unknown baseline {baseline!r}; choose from {SWEEP_BASELINES}")
    lines = ["x,wholesale_savings_pct,retail_savings_pct"]
    for p in points:
        cells = [repr(float(p.x))]
        for costs in (p.wholesale, p.retail):
            pct = costs.savings_pct_vs(baseline) if costs is not None else None
            cells.append("" if pct is None else repr(float(pct)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
