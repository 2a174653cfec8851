"""Configuration validation and dispatch feasibility checking.

Two layers live here:

- :func:`validate_config` inspects a (plant, grid, traces, tariff) bundle
  before any optimization and returns a report instead of raising, so
  callers can show every problem at once. Errors mean the simulation is
  not well-posed; warnings flag legal-but-suspicious setups (for example a
  retail tariff that pays more for exports than imports cost, which turns
  the dispatch into flagged arbitrage).

- :func:`check_schedule` / :func:`check_timeline` re-verify optimizer
  output against the raw constraint set with no LP machinery involved.
  They are the post-condition suite: every schedule and every realized
  timeline must come back clean to within ``FEASIBILITY_TOL`` (1e-6 in
  natural units).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curve import ProcessingCurve
from .horizon import HorizonProblem
from .types import (
    FEASIBILITY_TOL,
    DispatchTimeline,
    PlantConfig,
    RetailTariff,
    Tariff,
    TimeGrid,
    TraceSet,
    WholesaleTariff,
)

TOL = FEASIBILITY_TOL


class ConfigError(ValueError):
    """Raised by entry points when validate_config reports errors."""


@dataclass
class ValidationReport:
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def __str__(self) -> str:
        if self.ok and not self.warnings:
            return "configuration valid"
        lines = [f"error: {e}" for e in self.errors]
        lines += [f"warning: {w}" for w in self.warnings]
        return "\n".join(lines)


def validate_config(
    plant: PlantConfig,
    grid: TimeGrid,
    traces: TraceSet,
    tariff: Tariff = None,
    curve: ProcessingCurve = None,
) -> ValidationReport:
    """Cross-check every static invariant; report, never raise.

    ``tariff`` may be omitted for price-blind runs (the baselines);
    the optional ``curve`` enables the workload-vs-capacity checks that
    need the power-to-compute map.
    """
    rep = ValidationReport()
    err, warn = rep.errors.append, rep.warnings.append

    # plant ratings
    if plant.dc_capacity_kw <= 0:
        err(f"PlantConfig.dc_capacity_kw must be positive, got {plant.dc_capacity_kw}")
    if plant.renewable_capacity_kw <= 0:
        err(
            "PlantConfig.renewable_capacity_kw must be positive, got "
            f"{plant.renewable_capacity_kw}"
        )
    if plant.dc_power_min_kw < 0:
        err(f"PlantConfig.dc_power_min_kw must be nonnegative, got {plant.dc_power_min_kw}")
    ceiling = plant.dc_power_ceiling_kw
    if ceiling < plant.dc_power_min_kw:
        err(
            f"PlantConfig.dc_power_max_kw {ceiling} is below dc_power_min_kw "
            f"{plant.dc_power_min_kw}"
        )
    if ceiling > plant.dc_capacity_kw:
        err(
            f"PlantConfig.dc_power_max_kw {ceiling} exceeds dc_capacity_kw "
            f"{plant.dc_capacity_kw}"
        )
    if plant.import_max_kw < 0:
        err(f"PlantConfig.import_max_kw must be nonnegative, got {plant.import_max_kw}")
    if plant.export_max_kw < 0:
        err(f"PlantConfig.export_max_kw must be nonnegative, got {plant.export_max_kw}")
    if (
        plant.net_lower_kw is not None
        and plant.net_upper_kw is not None
        and plant.net_lower_kw > plant.net_upper_kw
    ):
        err(
            f"PlantConfig.net_lower_kw {plant.net_lower_kw} exceeds net_upper_kw "
            f"{plant.net_upper_kw}"
        )

    # renewable trace
    eta = traces.renewable.capacity_factor
    if len(eta) != grid.total_intervals:
        err(
            f"RenewableTrace length {len(eta)} != total_intervals {grid.total_intervals}"
        )
    if len(eta) and (eta.min() < -TOL or eta.max() > 1 + TOL):
        err(
            "RenewableTrace.capacity_factor must lie in [0, 1]; found "
            f"{eta.min():.6g}..{eta.max():.6g}"
        )

    # workload trace
    rigid = traces.workload.nondeferrable
    flex = traces.workload.deferrable_per_horizon
    if len(rigid) != grid.total_intervals:
        err(
            f"WorkloadTrace.nondeferrable length {len(rigid)} != total_intervals "
            f"{grid.total_intervals}"
        )
    if len(rigid) and rigid.min() < -TOL:
        err(f"WorkloadTrace.nondeferrable must be nonnegative; min {rigid.min():.6g}")
    if len(flex) != grid.num_horizons:
        err(
            f"WorkloadTrace.deferrable_per_horizon length {len(flex)} != "
            f"num_horizons {grid.num_horizons}"
        )
    if len(flex) and flex.min() < -TOL:
        err(
            "WorkloadTrace.deferrable_per_horizon must be nonnegative; min "
            f"{flex.min():.6g}"
        )

    # tariff
    if tariff is None:
        pass
    elif isinstance(tariff, WholesaleTariff):
        if len(tariff.lmp_usd_per_kwh) != grid.total_intervals:
            err(
                f"WholesaleTariff.lmp length {len(tariff.lmp_usd_per_kwh)} != "
                f"total_intervals {grid.total_intervals}"
            )
    elif isinstance(tariff, RetailTariff):
        imp, exp = tariff.import_rate_usd_per_kwh, tariff.export_rate_usd_per_kwh
        if len(imp) != grid.total_intervals:
            err(
                f"RetailTariff.import_rate length {len(imp)} != total_intervals "
                f"{grid.total_intervals}"
            )
        if len(exp) != grid.total_intervals:
            err(
                f"RetailTariff.export_rate length {len(exp)} != total_intervals "
                f"{grid.total_intervals}"
            )
        if tariff.demand_charge_usd_per_kw < 0:
            err(
                "RetailTariff.demand_charge_usd_per_kw must be nonnegative, got "
                f"{tariff.demand_charge_usd_per_kw}"
            )
        if len(imp) == len(exp) and np.any(exp > imp + 1e-12):
            t_bad = int(np.argmax(exp - imp))
            warn(
                f"RetailTariff export rate exceeds import rate at interval {t_bad} "
                "(price inversion); schedules will be flagged and netted"
            )
    else:
        err(f"unknown tariff type {type(tariff).__name__}")

    # curve-dependent cross checks
    if curve is not None and not rep.errors:
        if curve.max_power_kw < ceiling - 1e-9:
            warn(
                f"curve domain ends at {curve.max_power_kw:g} kW, below the dc power "
                f"ceiling {ceiling:g} kW; power above the curve end is unusable"
            )
        dt = grid.interval_hours
        cap_rate = curve.rate(min(ceiling, curve.max_power_kw))
        max_work = cap_rate * dt
        over = rigid > max_work + TOL
        if np.any(over):
            t_bad = int(np.argmax(over))
            err(
                f"nondeferrable work {rigid[t_bad]:.6g} at interval {t_bad} exceeds "
                f"per-interval compute capacity {max_work:.6g}"
            )
        else:
            spare_per_horizon = np.add.reduceat(
                max_work - rigid, np.arange(0, len(rigid), grid.horizon_intervals)
            )
            overflow = flex > spare_per_horizon + TOL
            if len(flex) == grid.num_horizons and np.any(overflow):
                h_bad = int(np.argmax(overflow))
                err(
                    f"deferrable work {flex[h_bad]:.6g} in horizon {h_bad} exceeds "
                    f"spare compute capacity {spare_per_horizon[h_bad]:.6g}"
                )
    return rep


def require_valid_config(
    plant: PlantConfig,
    grid: TimeGrid,
    traces: TraceSet,
    tariff: Tariff = None,
    curve: ProcessingCurve = None,
) -> ValidationReport:
    """validate_config, but errors raise :class:`ConfigError`."""
    report = validate_config(plant, grid, traces, tariff, curve)
    if not report.ok:
        raise ConfigError(str(report))
    return report


def _check_block(
    plant: PlantConfig,
    curve: ProcessingCurve,
    dt: float,
    capacity_factor: np.ndarray,
    rigid: np.ndarray,
    deferrable_total: float,
    pd: np.ndarray,
    im: np.ndarray,
    ex: np.ndarray,
    wdf: np.ndarray,
    offset: int,
) -> list:
    """Constraint residuals for one horizon block; pure arithmetic."""
    bad = []
    renewable_kw = capacity_factor * plant.renewable_capacity_kw
    net_lo, net_up = plant.net_bounds(renewable_kw)
    ceiling = min(plant.dc_power_ceiling_kw, curve.max_power_kw)

    def flag(mask, fmt):
        for t in np.flatnonzero(mask):
            bad.append(fmt(int(t)))

    flag(pd < plant.dc_power_min_kw - TOL, lambda t: (
        f"interval {t + offset}: dc power {pd[t]:.6g} below minimum "
        f"{plant.dc_power_min_kw:.6g}"))
    flag(pd > ceiling + TOL, lambda t: (
        f"interval {t + offset}: dc power {pd[t]:.6g} above ceiling {ceiling:.6g}"))
    flag(im < -TOL, lambda t: f"interval {t + offset}: negative import {im[t]:.6g}")
    flag(ex < -TOL, lambda t: f"interval {t + offset}: negative export {ex[t]:.6g}")
    flag(im > plant.import_max_kw + TOL, lambda t: (
        f"interval {t + offset}: import {im[t]:.6g} above limit "
        f"{plant.import_max_kw:.6g}"))
    flag(ex > plant.export_max_kw + TOL, lambda t: (
        f"interval {t + offset}: export {ex[t]:.6g} above limit "
        f"{plant.export_max_kw:.6g}"))
    flag(wdf < -TOL, lambda t: (
        f"interval {t + offset}: negative deferrable work {wdf[t]:.6g}"))

    capacity = curve.work(np.clip(pd, 0.0, curve.max_power_kw), dt)
    flag(rigid + wdf > capacity + TOL, lambda t: (
        f"interval {t + offset}: work {rigid[t] + wdf[t]:.6g} exceeds what "
        f"{pd[t]:.6g} kW can process ({capacity[t]:.6g})"))

    net = pd + ex - im
    flag(net < net_lo - TOL, lambda t: (
        f"interval {t + offset}: net exchange {net[t]:.6g} below lower bound "
        f"{net_lo[t]:.6g}"))
    flag(net > net_up + TOL, lambda t: (
        f"interval {t + offset}: net exchange {net[t]:.6g} above available "
        f"renewable bound {net_up[t]:.6g}"))

    overlap = np.minimum(im, ex)
    flag(overlap > TOL, lambda t: (
        f"interval {t + offset}: simultaneous import {im[t]:.6g} and export "
        f"{ex[t]:.6g}"))

    done = float(wdf.sum())
    if done < deferrable_total - TOL:
        bad.append(
            f"horizon starting at interval {offset}: deferrable work {done:.6g} "
            f"short of required {deferrable_total:.6g}"
        )
    return bad


def check_schedule(problem: HorizonProblem, schedule) -> list:
    """All Schedule-invariant violations against ``problem``; empty = pass."""
    T = problem.num_intervals
    for name in ("dc_power_kw", "import_kw", "export_kw", "deferrable_work"):
        if len(getattr(schedule, name)) != T:
            return [f"{name} has length {len(getattr(schedule, name))}, expected {T}"]
    return _check_block(
        problem.plant,
        problem.curve,
        problem.dt_hours,
        problem.capacity_factor,
        problem.nondeferrable,
        problem.deferrable_total,
        schedule.dc_power_kw,
        schedule.import_kw,
        schedule.export_kw,
        schedule.deferrable_work,
        offset=0,
    )


def check_timeline(
    timeline: DispatchTimeline,
    plant: PlantConfig,
    grid: TimeGrid,
    curve: ProcessingCurve,
    traces: TraceSet,
) -> list:
    """Feasibility suite for a realized timeline; empty list = pass.

    Verifies every per-interval Schedule invariant against the realized
    traces, per-horizon deferrable completion, the work bookkeeping
    (work_done = rigid + flexible), the recorded renewable availability,
    and that the running peak record matches the imports.
    """
    bad = []
    N = grid.total_intervals
    for name in (
        "dc_power_kw",
        "import_kw",
        "export_kw",
        "deferrable_work",
        "work_done",
        "renewable_kw",
    ):
        if len(getattr(timeline, name)) != N:
            bad.append(f"{name} has length {len(getattr(timeline, name))}, expected {N}")
    if len(timeline.horizon_peak_kw) != grid.num_horizons:
        bad.append(
            f"horizon_peak_kw has length {len(timeline.horizon_peak_kw)}, "
            f"expected {grid.num_horizons}"
        )
    if bad:
        return bad

    eta = traces.renewable.capacity_factor
    expected_renewable = eta * plant.renewable_capacity_kw
    drift = np.abs(timeline.renewable_kw - expected_renewable)
    for t in np.flatnonzero(drift > TOL)[:5]:
        bad.append(
            f"interval {t}: recorded renewable {timeline.renewable_kw[t]:.6g} kW "
            f"differs from trace {expected_renewable[t]:.6g} kW"
        )

    rigid = traces.workload.nondeferrable
    book = np.abs(timeline.work_done - (rigid + timeline.deferrable_work))
    for t in np.flatnonzero(book > TOL)[:5]:
        bad.append(
            f"interval {t}: work_done {timeline.work_done[t]:.6g} != rigid "
            f"{rigid[t]:.6g} + deferrable {timeline.deferrable_work[t]:.6g}"
        )

    for h in range(grid.num_horizons):
        sl = grid.horizon_slice(h)
        bad.extend(
            _check_block(
                plant,
                curve,
                grid.interval_hours,
                eta[sl],
                rigid[sl],
                float(traces.workload.deferrable_per_horizon[h]),
                timeline.dc_power_kw[sl],
                timeline.import_kw[sl],
                timeline.export_kw[sl],
                timeline.deferrable_work[sl],
                offset=sl.start,
            )
        )
        running_peak = float(timeline.import_kw[: sl.stop].max()) if sl.stop else 0.0
        if abs(timeline.horizon_peak_kw[h] - running_peak) > TOL:
            bad.append(
                f"horizon {h}: recorded peak {timeline.horizon_peak_kw[h]:.6g} kW "
                f"differs from running import max {running_peak:.6g} kW"
            )
    return bad
