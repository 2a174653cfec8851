"""Walk the piecewise-linear power-to-compute curve.

Builds the curve from breakpoints, prints the work rate along a grid of
power levels, and round-trips a few work targets through the inverse
lookup. The marginal rate drops from segment to segment, which is what
later makes partial-power operation worth optimizing.
"""

from dcems import ProcessingCurve

curve = ProcessingCurve.from_breakpoints(
    [(0.0, 0.0), (60.0, 120.0), (100.0, 160.0)]
)

print("segments (power range -> marginal work per kWh):")
for seg in curve.segments:
    print(f"  {seg.start_kw:6.1f} .. {seg.end_kw:6.1f} kW   slope {seg.slope:.2f}")

print("\npower -> work rate:")
for p in (0.0, 30.0, 60.0, 80.0, 100.0):
    print(f"  {p:6.1f} kW -> {curve.rate(p):7.1f} work/h")

print("\nwork target -> cheapest power (1 h interval):")
for w in (30.0, 120.0, 140.0, 160.0):
    p = curve.min_power_for_work(w, dt_hours=1.0)
    print(f"  {w:6.1f} work -> {p:6.2f} kW  (check: {curve.work(p, 1.0):.1f} work)")
