"""Rolling model-predictive-control dispatch over a full simulation span.

The loop is the standard one: forecast the remainder of the current
horizon, solve the horizon program, commit decisions, observe realized
traces, carry state (deferrable backlog, running import peak) forward.
Two commit modes exist:

- ``commit-full-horizon`` (default): solve once per horizon and commit the
  whole day's schedule. With the perfect-foresight forecaster this
  reproduces concatenated :func:`dcems.horizon.solve_horizon` output
  exactly and matches how the underlying month simulations are evaluated.
- ``commit-first-interval``: re-solve before every interval using the
  freshest state and commit only the first step. This is the real-time
  shape; it costs one LP per interval, so keep grids small.

Every committed interval passes through the same repair step, which
reconciles the plan with *realized* renewable output. When reality comes
in below forecast, the ladder is: cut exports, then raise imports, then
lower dc power toward the minimum that still carries the rigid work plus
whatever flexible work the deadline forces. Rigid work is never dropped;
if even the floor cannot fit the grid bounds, the run aborts with the
interval index. Deferrable completion is enforced by a forced-minimum
("must do") computed each interval: the backlog minus the spare compute
capacity forecast to remain before the deadline.

Progress logging: each committed interval emits (at DEBUG level)

    mpc t=<interval> pd=<kW> im=<kW> ex=<kW> wdf=<work> cost=<usd>

where cost is the running realized energy cost, demand charges excluded.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .curve import ProcessingCurve
from .horizon import (
    DispatchError,
    HorizonProblem,
    net_flows,
    solve_horizon,
)
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
from .validation import ConfigError, require_valid_config

logger = logging.getLogger(__name__)

#: Repairs smaller than this (kW / work units) are skipped so that a plan
#: that already matches reality is committed bit-for-bit.
REPAIR_EPS = 1e-9

_COMMIT_MODES = ("commit-full-horizon", "commit-first-interval")


class UnrepairableInterval(DispatchError):
    """Realized traces left no feasible commitment at an interval."""

    def __init__(self, t: int, reason: str):
        self.interval = t
        super().__init__(f"interval {t}: {reason}")


@dataclass(frozen=True)
class MpcPolicy:
    commit_mode: str = "commit-full-horizon"
    lookahead: Optional[int] = None  # intervals; None = to end of horizon

    def __post_init__(self) -> None:
        if self.commit_mode not in _COMMIT_MODES:
            raise ValueError(
                f"commit_mode must be one of {_COMMIT_MODES}, got {self.commit_mode!r}"
            )
        if self.lookahead is not None and self.lookahead < 1:
            raise ValueError("lookahead must be at least 1 interval")


@dataclass
class TraceWindow:
    """One forecast: per-interval series starting at ``start``."""

    start: int
    capacity_factor: np.ndarray
    nondeferrable: np.ndarray
    lmp: Optional[np.ndarray] = None
    import_rate: Optional[np.ndarray] = None
    export_rate: Optional[np.ndarray] = None
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.capacity_factor)


class PerfectForesight:
    """Forecaster that returns realized trace slices verbatim."""

    def __init__(self, traces: TraceSet, tariff: Tariff):
        self.traces = traces
        self.tariff = tariff

    def forecast(self, start: int, lookahead: int) -> TraceWindow:
        if lookahead < 1:
            raise ValueError("lookahead must be at least 1")
        n = len(self.traces.renewable.capacity_factor)
        if start < 0 or start >= n:
            raise ValueError(f"forecast start {start} outside trace range [0, {n})")
        stop = min(start + lookahead, n)
        window = TraceWindow(
            start=start,
            capacity_factor=self.traces.renewable.capacity_factor[start:stop].copy(),
            nondeferrable=self.traces.workload.nondeferrable[start:stop].copy(),
            truncated=stop - start < lookahead,
        )
        if isinstance(self.tariff, WholesaleTariff):
            window.lmp = self.tariff.lmp_usd_per_kwh[start:stop].copy()
        else:
            window.import_rate = self.tariff.import_rate_usd_per_kwh[start:stop].copy()
            window.export_rate = self.tariff.export_rate_usd_per_kwh[start:stop].copy()
        return window


class PersistenceForecast:
    """Repeats the last realized value across the lookahead.

    Capacity factors are clamped into [0, 1] and workload at 0; prices are
    deliberately not clamped (a negative price persisting is a legitimate
    forecast). At ``start == 0`` there is no history yet; with
    ``cold_start`` (the default) the first realized value stands in,
    otherwise forecasting before any history is an error.
    """

    def __init__(self, traces: TraceSet, tariff: Tariff, cold_start: bool = True):
        if len(traces.renewable.capacity_factor) == 0:
            raise ValueError("cannot build a persistence forecaster from empty traces")
        self.traces = traces
        self.tariff = tariff
        self.cold_start = cold_start

    def forecast(self, start: int, lookahead: int) -> TraceWindow:
        if lookahead < 1:
            raise ValueError("lookahead must be at least 1")
        n = len(self.traces.renewable.capacity_factor)
        if start < 0 or start >= n:
            raise ValueError(f"forecast start {start} outside trace range [0, {n})")
        if start == 0 and not self.cold_start:
            raise ValueError("no realized history before interval 0")
        last = max(start - 1, 0)
        k = min(lookahead, n - start)

        def held(series, lo=None, hi=None):
            v = float(series[last])
            if lo is not None:
                v = max(v, lo)
            if hi is not None:
                v = min(v, hi)
            return np.full(k, v)

        window = TraceWindow(
            start=start,
            capacity_factor=held(self.traces.renewable.capacity_factor, 0.0, 1.0),
            nondeferrable=held(self.traces.workload.nondeferrable, 0.0),
            truncated=k < lookahead,
        )
        if isinstance(self.tariff, WholesaleTariff):
            window.lmp = held(self.tariff.lmp_usd_per_kwh)
        else:
            window.import_rate = held(self.tariff.import_rate_usd_per_kwh)
            window.export_rate = held(self.tariff.export_rate_usd_per_kwh)
        return window


def perfect_foresight(traces: TraceSet, tariff: Tariff) -> PerfectForesight:
    return PerfectForesight(traces, tariff)


def persistence_forecast(
    traces: TraceSet, tariff: Tariff, cold_start: bool = True
) -> PersistenceForecast:
    return PersistenceForecast(traces, tariff, cold_start)


def _window_tariff(window: TraceWindow, tariff: Tariff) -> Tariff:
    if isinstance(tariff, WholesaleTariff):
        return WholesaleTariff(window.lmp)
    return RetailTariff(
        window.import_rate, window.export_rate, tariff.demand_charge_usd_per_kw
    )


def _commit_interval(
    t: int,
    plan_pd: float,
    plan_im: float,
    plan_ex: float,
    plan_wdf: float,
    realized_eta: float,
    realized_rigid: float,
    remaining: float,
    future_spare: float,
    plant: PlantConfig,
    curve: ProcessingCurve,
    dt: float,
) -> tuple:
    """Reconcile one planned interval with realized traces; see module doc."""
    ceiling = min(plant.dc_power_ceiling_kw, curve.max_power_kw)
    cap_work = curve.work(ceiling, dt)
    if realized_rigid > cap_work + FEASIBILITY_TOL:
        raise UnrepairableInterval(
            t, f"rigid work {realized_rigid:.6g} exceeds compute capacity {cap_work:.6g}"
        )
    must_do = max(0.0, remaining - future_spare)
    if realized_rigid + must_do > cap_work + FEASIBILITY_TOL:
        raise UnrepairableInterval(
            t,
            f"deadline forces {must_do:.6g} flexible work on top of rigid "
            f"{realized_rigid:.6g}, beyond capacity {cap_work:.6g}",
        )
    # keep the plan unless the deadline genuinely forces more
    wdf = plan_wdf if must_do <= plan_wdf + 1e-7 else must_do
    wdf = min(wdf, max(cap_work - realized_rigid, 0.0))
    if wdf < must_do - FEASIBILITY_TOL:
        raise UnrepairableInterval(
            t, f"capacity allows {wdf:.6g} flexible work, deadline needs {must_do:.6g}"
        )

    need = curve.min_power_for_work(realized_rigid + wdf, dt)
    pd = min(max(plan_pd, need, plant.dc_power_min_kw), ceiling)
    im, ex = plan_im, plan_ex

    renewable_kw = realized_eta * plant.renewable_capacity_kw
    lo = 0.0 if plant.net_lower_kw is None else plant.net_lower_kw
    up = renewable_kw if plant.net_upper_kw is None else plant.net_upper_kw

    net = pd + ex - im
    excess = net - up
    if excess > REPAIR_EPS:  # step 1: cut exports
        cut = min(ex, excess)
        ex -= cut
        net -= cut
        excess = net - up
    if excess > REPAIR_EPS:  # step 2: raise imports
        add = min(plant.import_max_kw - im, excess)
        im += add
        net -= add
        excess = net - up
    if excess > REPAIR_EPS:  # step 3: lower dc power toward its floor
        floor = max(
            plant.dc_power_min_kw,
            curve.min_power_for_work(realized_rigid + must_do, dt),
            lo + im - ex,
        )
        drop = min(max(pd - floor, 0.0), excess)
        pd -= drop
        net -= drop
        wdf = min(wdf, max(curve.work(pd, dt) - realized_rigid, 0.0))
        if net - up > FEASIBILITY_TOL:
            raise UnrepairableInterval(
                t,
                f"net exchange {net:.6g} kW cannot be brought under the "
                f"renewable bound {up:.6g} kW",
            )
    deficit = lo - net
    if deficit > REPAIR_EPS:  # mirror ladder for a net-exchange floor
        cut = min(im, deficit)
        im -= cut
        net += cut
        deficit = lo - net
        if deficit > REPAIR_EPS:
            add = min(plant.export_max_kw - ex, deficit)
            ex += add
            net += add
            deficit = lo - net
        if deficit > REPAIR_EPS:
            add = min(ceiling - pd, deficit)
            pd += add
            net += add
        if lo - net > FEASIBILITY_TOL:
            raise UnrepairableInterval(
                t, f"net exchange {net:.6g} kW cannot reach its floor {lo:.6g} kW"
            )
    if min(im, ex) > 0.0:
        im_arr, ex_arr = net_flows(np.array([im]), np.array([ex]))
        im, ex = float(im_arr[0]), float(ex_arr[0])
    return pd, im, ex, wdf


def _energy_cost_step(tariff: Tariff, t: int, im: float, ex: float, dt: float) -> float:
    if isinstance(tariff, WholesaleTariff):
        return float(tariff.lmp_usd_per_kwh[t]) * (im - ex) * dt
    return (
        float(tariff.import_rate_usd_per_kwh[t]) * im
        - float(tariff.export_rate_usd_per_kwh[t]) * ex
    ) * dt


def run_mpc(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    tariff: Tariff,
    forecaster=None,
    policy: Optional[MpcPolicy] = None,
) -> DispatchTimeline:
    """Dispatch the full simulation span and return the realized timeline.

    ``forecaster`` defaults to perfect foresight, ``policy`` to committing
    full horizons; together those reproduce the plain per-day optimum.
    Raises :class:`ConfigError` when validation fails and
    :class:`UnrepairableInterval` when realized traces leave no feasible
    commitment.
    """
    report = require_valid_config(plant, grid, traces, tariff, curve)
    for w in report.warnings:
        logger.warning("%s", w)
    if forecaster is None:
        forecaster = PerfectForesight(traces, tariff)
    if policy is None:
        policy = MpcPolicy()

    N, H, dt = grid.total_intervals, grid.horizon_intervals, grid.interval_hours
    eta_real = traces.renewable.capacity_factor
    rigid_real = traces.workload.nondeferrable
    ceiling = min(plant.dc_power_ceiling_kw, curve.max_power_kw)
    cap_work = curve.work(ceiling, dt)

    pd_out = np.zeros(N)
    im_out = np.zeros(N)
    ex_out = np.zeros(N)
    wdf_out = np.zeros(N)
    horizon_peaks = np.zeros(grid.num_horizons)
    peak = 0.0
    running_cost = 0.0

    for h in range(grid.num_horizons):
        t0 = h * H
        deadline = t0 + H
        remaining = float(traces.workload.deferrable_per_horizon[h])

        if policy.commit_mode == "commit-full-horizon":
            window = forecaster.forecast(t0, H)
            problem = HorizonProblem(
                plant=plant,
                curve=curve,
                dt_hours=dt,
                capacity_factor=window.capacity_factor,
                nondeferrable=window.nondeferrable,
                deferrable_total=remaining,
                tariff=_window_tariff(window, tariff),
                peak_so_far_kw=peak,
            )
            plan = solve_horizon(problem)
            for i in range(H):
                t = t0 + i
                future_rigid = window.nondeferrable[i + 1 :]
                future_spare = float(np.maximum(cap_work - future_rigid, 0.0).sum())
                pd, im, ex, wdf = _commit_interval(
                    t,
                    float(plan.dc_power_kw[i]),
                    float(plan.import_kw[i]),
                    float(plan.export_kw[i]),
                    float(plan.deferrable_work[i]),
                    float(eta_real[t]),
                    float(rigid_real[t]),
                    remaining,
                    future_spare,
                    plant,
                    curve,
                    dt,
                )
                pd_out[t], im_out[t], ex_out[t], wdf_out[t] = pd, im, ex, wdf
                remaining -= wdf
                peak = max(peak, im)
                running_cost += _energy_cost_step(tariff, t, im, ex, dt)
                logger.debug(
                    "mpc t=%d pd=%.3f im=%.3f ex=%.3f wdf=%.3f cost=%.2f",
                    t, pd, im, ex, wdf, running_cost,
                )
        else:  # commit-first-interval
            for t in range(t0, deadline):
                to_deadline = deadline - t
                look = to_deadline if policy.lookahead is None else min(
                    policy.lookahead, to_deadline
                )
                window = forecaster.forecast(t, to_deadline)
                beyond = window.nondeferrable[look:]
                spare_beyond = float(np.maximum(cap_work - beyond, 0.0).sum())
                required = min(
                    max(0.0, remaining - spare_beyond),
                    float(np.maximum(cap_work - window.nondeferrable[:look], 0.0).sum()),
                )
                solve_window = TraceWindow(
                    start=t,
                    capacity_factor=window.capacity_factor[:look],
                    nondeferrable=window.nondeferrable[:look],
                    lmp=None if window.lmp is None else window.lmp[:look],
                    import_rate=(
                        None if window.import_rate is None else window.import_rate[:look]
                    ),
                    export_rate=(
                        None if window.export_rate is None else window.export_rate[:look]
                    ),
                    truncated=window.truncated,
                )
                problem = HorizonProblem(
                    plant=plant,
                    curve=curve,
                    dt_hours=dt,
                    capacity_factor=solve_window.capacity_factor,
                    nondeferrable=solve_window.nondeferrable,
                    deferrable_total=required,
                    tariff=_window_tariff(solve_window, tariff),
                    peak_so_far_kw=peak,
                )
                plan = solve_horizon(problem)
                future_rigid = window.nondeferrable[1:]
                future_spare = float(np.maximum(cap_work - future_rigid, 0.0).sum())
                pd, im, ex, wdf = _commit_interval(
                    t,
                    float(plan.dc_power_kw[0]),
                    float(plan.import_kw[0]),
                    float(plan.export_kw[0]),
                    float(plan.deferrable_work[0]),
                    float(eta_real[t]),
                    float(rigid_real[t]),
                    remaining,
                    future_spare,
                    plant,
                    curve,
                    dt,
                )
                pd_out[t], im_out[t], ex_out[t], wdf_out[t] = pd, im, ex, wdf
                remaining -= wdf
                peak = max(peak, im)
                running_cost += _energy_cost_step(tariff, t, im, ex, dt)
                logger.debug(
                    "mpc t=%d pd=%.3f im=%.3f ex=%.3f wdf=%.3f cost=%.2f",
                    t, pd, im, ex, wdf, running_cost,
                )

        if remaining > FEASIBILITY_TOL:
            raise DispatchError(
                f"horizon {h} ended {remaining:.6g} work units short of its "
                "deferrable requirement"
            )
        horizon_peaks[h] = peak

    return DispatchTimeline(
        dc_power_kw=pd_out,
        import_kw=im_out,
        export_kw=ex_out,
        deferrable_work=wdf_out,
        work_done=rigid_real + wdf_out,
        renewable_kw=eta_real * plant.renewable_capacity_kw,
        horizon_peak_kw=horizon_peaks,
    )
