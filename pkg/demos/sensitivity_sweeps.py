"""Sweep workload flexibility and renewable sizing on one frozen month.

Two one-dimensional experiments around the same scenario as
``month_simulation``: first the share of deferrable work from 0 to 1
with total work held fixed, then the renewable plant resized from a
quarter of the hall's capacity to double. Output is the figure-ready
CSV the ``dcems sweep`` subcommand writes.
"""

from dcems import (
    PlantConfig,
    ProcessingCurve,
    TimeGrid,
    sweep_capacity_ratio,
    sweep_deferrable_fraction,
    sweep_to_csv,
    synth_traces,
)

grid = TimeGrid(interval_hours=1.0, horizon_intervals=24, total_intervals=744)
plant = PlantConfig(
    dc_capacity_kw=100_000.0,
    renewable_capacity_kw=60_000.0,
    import_max_kw=150_000.0,
    export_max_kw=30_000.0,
)
curve = ProcessingCurve.from_breakpoints(
    [(0.0, 0.0), (60_000.0, 120_000.0), (100_000.0, 160_000.0)]
)
traces = synth_traces(
    0, grid, "windy", nonnegative_prices=True, max_work_per_interval=164_000.0
)

points = sweep_deferrable_fraction(
    plant, curve, grid, traces, [0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
    demand_charge_usd_per_kw=12.39,
)
print("# deferrable fraction sweep (savings vs no-colocation)")
print(sweep_to_csv(points))

points = sweep_capacity_ratio(
    plant, curve, grid, traces, [0.25, 0.5, 1.0, 1.5, 2.0],
    demand_charge_usd_per_kw=12.39,
)
print("# renewable-to-hall capacity ratio sweep (savings vs no-colocation)")
print(sweep_to_csv(points))
