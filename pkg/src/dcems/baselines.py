"""Non-optimized reference configurations.

Both baselines execute workload the moment it arrives, with no price
awareness and no shifting: flexible work is converted into a fixed arrival
stream (uniform across its horizon by default, or front-loaded), added to
the rigid stream, and run at the minimum power the curve allows.

- no-colocation: a grid-only site. Every kW comes through the meter,
  nothing is exported, renewables do not exist for this configuration (its
  timeline records zero renewable availability).
- colocation (greedy): the renewable plant is connected but dispatch stays
  naive. Renewable output covers the hall first, any shortfall is
  imported, any surplus is exported up to the tie limit and curtailed past
  it. Imports and exports never overlap by construction.

Because execution is immediate, an arrival stream that overloads a single
interval is an error (named by interval), even though an optimizing
dispatcher could have shifted it.
"""

from __future__ import annotations

import numpy as np

from .curve import ProcessingCurve
from .horizon import DispatchError
from .types import (
    DispatchTimeline,
    PlantConfig,
    RenewableTrace,
    TimeGrid,
    TraceSet,
    WorkloadTrace,
)
from .validation import require_valid_config

ARRIVAL_PROFILES = ("uniform", "front-loaded")


def deferrable_arrivals(
    workload: WorkloadTrace,
    grid: TimeGrid,
    profile: str = "uniform",
    max_work_per_interval: float = None,
) -> np.ndarray:
    """Per-interval arrival stream for the flexible pool.

    uniform: each horizon's pool spread evenly over its intervals.
    front-loaded: the pool lands at horizon start and is worked off as
    fast as spare capacity allows (requires ``max_work_per_interval``).
    """
    if profile not in ARRIVAL_PROFILES:
        raise ValueError(f"arrival profile must be one of {ARRIVAL_PROFILES}")
    H = grid.horizon_intervals
    arrivals = np.zeros(grid.total_intervals)
    for h in range(grid.num_horizons):
        sl = grid.horizon_slice(h)
        pool = float(workload.deferrable_per_horizon[h])
        if profile == "uniform":
            arrivals[sl] = pool / H
        else:
            if max_work_per_interval is None:
                raise ValueError("front-loaded arrivals need max_work_per_interval")
            rigid = workload.nondeferrable[sl]
            spare = np.maximum(max_work_per_interval - rigid, 0.0)
            remaining = pool
            for i in range(H):
                take = min(remaining, spare[i])
                arrivals[sl.start + i] = take
                remaining -= take
            if remaining > 1e-9:
                raise DispatchError(
                    f"horizon {h}: front-loaded arrivals leave {remaining:.6g} "
                    "work units without capacity"
                )
    return arrivals


def zero_renewable(traces: TraceSet) -> TraceSet:
    """The traces as seen by a site with no renewable plant."""
    return TraceSet(
        renewable=RenewableTrace(np.zeros_like(traces.renewable.capacity_factor)),
        workload=traces.workload,
        lmp_usd_per_kwh=traces.lmp_usd_per_kwh,
        import_rate_usd_per_kwh=traces.import_rate_usd_per_kwh,
        export_rate_usd_per_kwh=traces.export_rate_usd_per_kwh,
    )


def _immediate_power(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    deferrable_arrival: str,
) -> tuple[np.ndarray, np.ndarray]:
    dt = grid.interval_hours
    ceiling = min(plant.dc_power_ceiling_kw, curve.max_power_kw)
    cap_work = curve.work(ceiling, dt)
    arrivals = deferrable_arrivals(
        traces.workload, grid, deferrable_arrival, max_work_per_interval=cap_work
    )
    work = traces.workload.nondeferrable + arrivals
    over = work > cap_work + 1e-9
    if np.any(over):
        t_bad = int(np.argmax(over))
        raise DispatchError(
            f"interval {t_bad}: arrived work {work[t_bad]:.6g} exceeds what the "
            f"site can process ({cap_work:.6g}); immediate execution infeasible"
        )
    pd = np.maximum(curve.min_power_for_work(work, dt), plant.dc_power_min_kw)
    return pd, arrivals


def _finish(
    pd, im, ex, arrivals, renewable_kw, rigid, grid
) -> DispatchTimeline:
    peaks = np.maximum.accumulate(
        im.reshape(grid.num_horizons, grid.horizon_intervals).max(axis=1)
    )
    return DispatchTimeline(
        dc_power_kw=pd,
        import_kw=im,
        export_kw=ex,
        deferrable_work=arrivals,
        work_done=rigid + arrivals,
        renewable_kw=renewable_kw,
        horizon_peak_kw=peaks,
    )


def simulate_no_colocation(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    deferrable_arrival: str = "uniform",
) -> DispatchTimeline:
    """Grid-only operation: import exactly what the hall draws."""
    require_valid_config(plant, grid, traces, curve=curve)
    pd, arrivals = _immediate_power(plant, curve, grid, traces, deferrable_arrival)
    over = pd > plant.import_max_kw + 1e-9
    if np.any(over):
        t_bad = int(np.argmax(over))
        raise DispatchError(
            f"interval {t_bad}: grid-only draw {pd[t_bad]:.6g} kW exceeds the "
            f"import limit {plant.import_max_kw:.6g} kW"
        )
    return _finish(
        pd,
        pd.copy(),
        np.zeros_like(pd),
        arrivals,
        np.zeros_like(pd),
        traces.workload.nondeferrable,
        grid,
    )


def simulate_colocation_greedy(
    plant: PlantConfig,
    curve: ProcessingCurve,
    grid: TimeGrid,
    traces: TraceSet,
    deferrable_arrival: str = "uniform",
) -> DispatchTimeline:
    """Colocated renewables without scheduling: self-consume, then trade."""
    require_valid_config(plant, grid, traces, curve=curve)
    pd, arrivals = _immediate_power(plant, curve, grid, traces, deferrable_arrival)
    renewable_kw = traces.renewable.capacity_factor * plant.renewable_capacity_kw
    shortfall = np.maximum(pd - renewable_kw, 0.0)
    surplus = np.maximum(renewable_kw - pd, 0.0)
    im = shortfall
    ex = np.minimum(surplus, plant.export_max_kw)  # rest is curtailed
    over = im > plant.import_max_kw + 1e-9
    if np.any(over):
        t_bad = int(np.argmax(over))
        raise DispatchError(
            f"interval {t_bad}: renewable shortfall needs {im[t_bad]:.6g} kW of "
            f"imports, above the limit {plant.import_max_kw:.6g} kW"
        )
    return _finish(
        pd, im, ex, arrivals, renewable_kw, traces.workload.nondeferrable, grid
    )
