"""Run the rolling controller on held-over forecasts and watch it repair.

Two simulated days on a desk-scale plant. The persistence forecaster
plans each day on yesterday's conditions, so when the wind dies on day
two the committed plan briefly promises renewable power that never
arrives. The controller repairs each interval against realized
conditions (cut exports, then buy more, then slow the hall) and the
month still settles; the cost gap to perfect foresight is the price of
forecasting naively.
"""

import logging
import sys

import numpy as np

from dcems import (
    PlantConfig,
    ProcessingCurve,
    RenewableTrace,
    TimeGrid,
    TraceSet,
    WorkloadTrace,
    build_tariff,
    perfect_foresight,
    persistence_forecast,
    run_mpc,
    settle_wholesale,
)

grid = TimeGrid(interval_hours=1.0, horizon_intervals=24, total_intervals=48)
plant = PlantConfig(
    dc_capacity_kw=60.0,
    renewable_capacity_kw=80.0,
    import_max_kw=100.0,
    export_max_kw=40.0,
)
curve = ProcessingCurve.from_breakpoints([(0.0, 0.0), (50.0, 100.0), (100.0, 150.0)])

hours = np.arange(48)
eta = np.where(hours < 24, 0.7, 0.05)  # wind dies on day two
rng = np.random.default_rng(5)
rigid = rng.uniform(15.0, 35.0, 48)
flex = np.array([240.0, 240.0])
lmp = 0.05 + 0.03 * np.sin(2 * np.pi * (hours - 15) / 24.0)

traces = TraceSet(
    renewable=RenewableTrace(eta),
    workload=WorkloadTrace(rigid, flex),
    lmp_usd_per_kwh=lmp,
)
tariff = build_tariff(traces, "wholesale")

logging.basicConfig(level=logging.WARNING, format="%(message)s", stream=sys.stdout)
logging.getLogger("dcems.mpc").setLevel(logging.DEBUG)

print("--- persistence forecast (day two planned on day one's wind) ---")
timeline = run_mpc(
    plant, curve, grid, traces, tariff,
    forecaster=persistence_forecast(traces, tariff),
)
naive = settle_wholesale(timeline, tariff, grid).net_cost_usd

logging.getLogger("dcems.mpc").setLevel(logging.WARNING)
timeline = run_mpc(
    plant, curve, grid, traces, tariff,
    forecaster=perfect_foresight(traces, tariff),
)
perfect = settle_wholesale(timeline, tariff, grid).net_cost_usd

print(f"\nnet cost, persistence forecast: {naive:8.2f} USD")
print(f"net cost, perfect foresight:    {perfect:8.2f} USD")
print(f"cost of naive forecasting:      {naive - perfect:8.2f} USD")
