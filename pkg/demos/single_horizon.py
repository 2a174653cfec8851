"""Dispatch one scheduling horizon and show where flexible work lands.

Eight hourly intervals: wind blows in the early hours, prices spike in
the evening. The solver pushes the deferrable work into the windy and
cheap intervals, exports leftover renewable output, and leaves the
expensive evening to the bare minimum of nondeferrable load.
"""

import numpy as np

from dcems import HorizonProblem, PlantConfig, ProcessingCurve, WholesaleTariff, solve_horizon

plant = PlantConfig(
    dc_capacity_kw=100.0,
    renewable_capacity_kw=80.0,
    import_max_kw=120.0,
    export_max_kw=50.0,
)
curve = ProcessingCurve.from_breakpoints([(0.0, 0.0), (60.0, 120.0), (100.0, 160.0)])

wind = np.array([0.9, 0.8, 0.6, 0.3, 0.1, 0.0, 0.0, 0.2])
price = np.array([0.02, 0.02, 0.03, 0.05, 0.08, 0.14, 0.12, 0.06])
rigid = np.array([20.0, 20.0, 30.0, 30.0, 40.0, 40.0, 30.0, 20.0])

problem = HorizonProblem(
    plant=plant,
    curve=curve,
    dt_hours=1.0,
    capacity_factor=wind,
    nondeferrable=rigid,
    deferrable_total=300.0,
    tariff=WholesaleTariff(price),
    peak_so_far_kw=0.0,
)
sched = solve_horizon(problem)

print("  t  price  wind_kw  power_kw  import  export  deferred_work")
for t in range(8):
    print(
        f"  {t}  {price[t]:5.2f}  {wind[t] * 80.0:7.1f}  {sched.dc_power_kw[t]:8.1f}"
        f"  {sched.import_kw[t]:6.1f}  {sched.export_kw[t]:6.1f}"
        f"  {sched.deferrable_work[t]:13.1f}"
    )
print(f"\nhorizon profit contribution: {sched.objective_usd:+.2f} USD")
print(f"deferred work total: {sched.deferrable_work.sum():.1f} (target 300.0)")
