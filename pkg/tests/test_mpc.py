"""Rolling MPC loop: forecasters, commit modes, repair, and state threading."""

import logging
import re

import numpy as np
import pytest

from dcems import (
    HorizonProblem,
    MpcPolicy,
    PerfectForesight,
    PersistenceForecast,
    RetailTariff,
    UnrepairableInterval,
    check_timeline,
    run_mpc,
    settle_retail,
    settle_wholesale,
    solve_horizon,
)

from helpers import grid_of, identity_curve, retail, small_plant, traces_of, wholesale

TIMELINE_FIELDS = ("dc_power_kw", "import_kw", "export_kw", "deferrable_work")


def _random_case(rng, total=8, horizon=4):
    grid = grid_of(total, horizon=horizon)
    traces = traces_of(
        eta=rng.uniform(0, 1, total),
        rigid=rng.uniform(0, 30, total),
        flex=rng.uniform(0, 25, total // horizon),
        lmp=rng.uniform(0, 0.2, total),
        imp=(imp := rng.uniform(0.1, 0.3, total)),
        exp=imp * rng.uniform(0.2, 0.8, total),
    )
    return grid, traces


def test_perfect_foresight_returns_realized_slices():
    grid, traces = _random_case(np.random.default_rng(0))
    fc = PerfectForesight(traces, wholesale(traces.lmp_usd_per_kwh))
    window = fc.forecast(0, 4)
    assert not window.truncated
    assert np.array_equal(window.capacity_factor, traces.renewable.capacity_factor[:4])
    assert np.array_equal(window.nondeferrable, traces.workload.nondeferrable[:4])
    assert np.array_equal(window.lmp, traces.lmp_usd_per_kwh[:4])
    rt = PerfectForesight(
        traces, retail(traces.import_rate_usd_per_kwh, traces.export_rate_usd_per_kwh)
    ).forecast(2, 3)
    assert np.array_equal(rt.import_rate, traces.import_rate_usd_per_kwh[2:5])
    assert np.array_equal(rt.export_rate, traces.export_rate_usd_per_kwh[2:5])


def test_perfect_foresight_truncates_at_trace_end():
    grid, traces = _random_case(np.random.default_rng(1))
    fc = PerfectForesight(traces, wholesale(traces.lmp_usd_per_kwh))
    window = fc.forecast(7, 4)
    assert window.truncated
    assert len(window) == 1
    with pytest.raises(ValueError, match="outside trace range"):
        fc.forecast(8, 1)
    with pytest.raises(ValueError, match="lookahead"):
        fc.forecast(0, 0)


def test_perfect_foresight_matches_realized_at_every_start():
    grid, traces = _random_case(np.random.default_rng(2))
    fc = PerfectForesight(traces, wholesale(traces.lmp_usd_per_kwh))
    for t in range(8):
        window = fc.forecast(t, 3)
        stop = min(t + 3, 8)
        assert np.array_equal(
            window.capacity_factor, traces.renewable.capacity_factor[t:stop]
        )


def test_persistence_holds_the_last_realized_value():
    traces = traces_of(
        eta=[0.4, 0.9, 0.1], rigid=[12.0, 0.0, 0.0], flex=[0.0], lmp=[-0.002, 0.5, 0.5]
    )
    fc = PersistenceForecast(traces, wholesale(traces.lmp_usd_per_kwh))
    window = fc.forecast(1, 3)  # history ends at eta=0.4
    assert np.allclose(window.capacity_factor, [0.4, 0.4])  # truncated to trace end
    assert np.allclose(window.nondeferrable, [12.0, 12.0])
    # negative prices persist; there is no clamp on prices
    assert np.allclose(window.lmp, [-0.002, -0.002])
    assert window.truncated


def test_persistence_clamps_domain_bounds_but_not_prices():
    traces = traces_of(eta=[1.0, 0.5], rigid=[5.0, 5.0], flex=[0.0], lmp=[0.1, 0.1])
    window = PersistenceForecast(traces, wholesale(traces.lmp_usd_per_kwh)).forecast(1, 1)
    assert window.capacity_factor[0] == 1.0
    assert window.nondeferrable[0] == 5.0


def test_persistence_cold_start_contract():
    traces = traces_of(eta=[0.7, 0.2], rigid=[3.0, 3.0], flex=[0.0], lmp=[0.1, 0.1])
    tariff = wholesale(traces.lmp_usd_per_kwh)
    # default: the first realized value stands in before any history exists
    window = PersistenceForecast(traces, tariff).forecast(0, 2)
    assert np.allclose(window.capacity_factor, [0.7, 0.7])
    with pytest.raises(ValueError, match="history"):
        PersistenceForecast(traces, tariff, cold_start=False).forecast(0, 2)
    empty = traces_of(eta=[], rigid=[], flex=[], lmp=[])
    with pytest.raises(ValueError, match="empty"):
        PersistenceForecast(empty, tariff)


def test_policy_rejects_bad_settings():
    with pytest.raises(ValueError, match="commit_mode"):
        MpcPolicy(commit_mode="commit-sometimes")
    with pytest.raises(ValueError, match="lookahead"):
        MpcPolicy(lookahead=0)


def test_full_horizon_commit_reproduces_concatenated_solves():
    rng = np.random.default_rng(7)
    grid, traces = _random_case(rng)
    plant = small_plant()
    curve = identity_curve(60.0)
    tariff = retail(
        traces.import_rate_usd_per_kwh, traces.export_rate_usd_per_kwh, 5.0
    )
    timeline = run_mpc(plant, curve, grid, traces, tariff)

    peak = 0.0
    for h in range(2):
        sl = slice(4 * h, 4 * h + 4)
        plan = solve_horizon(
            HorizonProblem(
                plant=plant,
                curve=curve,
                dt_hours=1.0,
                capacity_factor=traces.renewable.capacity_factor[sl],
                nondeferrable=traces.workload.nondeferrable[sl],
                deferrable_total=float(traces.workload.deferrable_per_horizon[h]),
                tariff=RetailTariff(
                    tariff.import_rate_usd_per_kwh[sl],
                    tariff.export_rate_usd_per_kwh[sl],
                    5.0,
                ),
                peak_so_far_kw=peak,
            )
        )
        for mine, theirs in (
            (timeline.dc_power_kw[sl], plan.dc_power_kw),
            (timeline.import_kw[sl], plan.import_kw),
            (timeline.export_kw[sl], plan.export_kw),
            (timeline.deferrable_work[sl], plan.deferrable_work),
        ):
            assert np.allclose(mine, theirs, atol=1e-9)
        peak = max(peak, float(plan.import_kw.max()))
        assert timeline.horizon_peak_kw[h] == pytest.approx(peak, abs=1e-9)


def test_commit_modes_agree_under_perfect_foresight():
    rng = np.random.default_rng(8)
    grid, traces = _random_case(rng)
    plant = small_plant()
    curve = identity_curve(60.0)
    tariff = wholesale(traces.lmp_usd_per_kwh)
    full = run_mpc(plant, curve, grid, traces, tariff)
    step = run_mpc(
        plant, curve, grid, traces, tariff,
        policy=MpcPolicy(commit_mode="commit-first-interval"),
    )
    a = settle_wholesale(full, tariff, grid).net_cost_usd
    b = settle_wholesale(step, tariff, grid).net_cost_usd
    assert a == pytest.approx(b, abs=1e-6)


def test_persistence_equals_perfect_on_a_constant_trace():
    grid = grid_of(6, horizon=3)
    traces = traces_of(
        eta=[0.6] * 6, rigid=[20.0] * 6, flex=[16.0, 16.0], lmp=[0.05] * 6
    )
    plant = small_plant()
    curve = identity_curve(60.0)
    tariff = wholesale(traces.lmp_usd_per_kwh)
    exact = run_mpc(plant, curve, grid, traces, tariff)
    held = run_mpc(
        plant, curve, grid, traces, tariff,
        forecaster=PersistenceForecast(traces, tariff),
    )
    for field in TIMELINE_FIELDS:
        assert np.array_equal(getattr(exact, field), getattr(held, field)), field


def test_repair_raises_import_when_renewable_drops_out():
    # planned on held eta=0.5 (40 kW): pd=30, export the spare 10 kW.
    # realized eta at t=1 is 0, so the 40 kW bound collapses to 0: the
    # repair cuts the 10 kW export, then imports the remaining 30 kW.
    grid = grid_of(3)
    plant = small_plant()
    curve = identity_curve(60.0)
    traces = traces_of(
        eta=[0.5, 0.0, 0.5], rigid=[30.0] * 3, flex=[0.0], lmp=[0.1] * 3
    )
    tariff = wholesale(traces.lmp_usd_per_kwh)
    timeline = run_mpc(
        plant, curve, grid, traces, tariff,
        forecaster=PersistenceForecast(traces, tariff),
    )
    assert np.allclose(timeline.dc_power_kw, [30.0, 30.0, 30.0])
    assert np.allclose(timeline.import_kw, [0.0, 30.0, 0.0])
    assert np.allclose(timeline.export_kw, [10.0, 0.0, 10.0])
    assert check_timeline(timeline, plant, grid, curve, traces) == []


def test_unrepairable_interval_names_the_interval():
    # at t=1 the hall needs 50 kW, realized renewable is 0, and the tie
    # can only import 20 kW; no repair can close that gap
    grid = grid_of(3)
    plant = small_plant(import_max_kw=20.0)
    curve = identity_curve(60.0)
    traces = traces_of(
        eta=[0.5, 0.0, 0.5], rigid=[30.0, 50.0, 30.0], flex=[0.0], lmp=[0.1] * 3
    )
    tariff = wholesale(traces.lmp_usd_per_kwh)
    with pytest.raises(UnrepairableInterval, match="interval 1"):
        run_mpc(
            plant, curve, grid, traces, tariff,
            forecaster=PersistenceForecast(traces, tariff),
        )


def test_perfect_foresight_dominates_persistence():
    rng = np.random.default_rng(21)
    plant = small_plant()
    curve = identity_curve(60.0)
    for seed in range(5):
        grid, traces = _random_case(np.random.default_rng(100 + seed))
        for market in ("wholesale", "retail"):
            if market == "wholesale":
                tariff = wholesale(traces.lmp_usd_per_kwh)
                settle = settle_wholesale
            else:
                tariff = retail(
                    traces.import_rate_usd_per_kwh,
                    traces.export_rate_usd_per_kwh,
                    3.0,
                )
                settle = settle_retail
            exact = settle(run_mpc(plant, curve, grid, traces, tariff), tariff, grid)
            held = settle(
                run_mpc(
                    plant, curve, grid, traces, tariff,
                    forecaster=PersistenceForecast(traces, tariff),
                ),
                tariff,
                grid,
            )
            assert exact.net_cost_usd <= held.net_cost_usd + 1e-6, (seed, market)


def test_incremental_peak_charges_telescope():
    # peaks rise 20 -> 40 -> 40 across horizons; the incremental charges
    # must sum to the monthly-peak charge the settlement bills
    grid = grid_of(9, horizon=3)
    plant = small_plant()
    curve = identity_curve(60.0)
    rigid = [10.0, 20.0, 15.0, 40.0, 5.0, 30.0, 30.0, 25.0, 10.0]
    traces = traces_of(
        eta=[0.0] * 9, rigid=rigid, flex=[0.0] * 3,
        imp=[0.2] * 9, exp=[0.1] * 9,
    )
    tariff = retail(traces.import_rate_usd_per_kwh, traces.export_rate_usd_per_kwh, 6.0)
    timeline = run_mpc(plant, curve, grid, traces, tariff)
    peaks = timeline.horizon_peak_kw
    assert np.allclose(peaks, [20.0, 40.0, 40.0])
    increments = np.diff(peaks, prepend=0.0)
    assert increments.min() >= 0.0
    report = settle_retail(timeline, tariff, grid)
    assert 6.0 * increments.sum() == pytest.approx(report.demand_charge_usd, abs=1e-6)


def test_every_mode_yields_a_feasible_timeline():
    rng = np.random.default_rng(33)
    grid, traces = _random_case(np.random.default_rng(55))
    plant = small_plant()
    curve = identity_curve(60.0)
    tariff = retail(
        traces.import_rate_usd_per_kwh, traces.export_rate_usd_per_kwh, 2.0
    )
    for make_fc in (PerfectForesight, PersistenceForecast):
        for mode in ("commit-full-horizon", "commit-first-interval"):
            timeline = run_mpc(
                plant, curve, grid, traces, tariff,
                forecaster=make_fc(traces, tariff),
                policy=MpcPolicy(commit_mode=mode),
            )
            violations = check_timeline(timeline, plant, grid, curve, traces)
            assert violations == [], (make_fc.__name__, mode, violations)


def test_short_lookahead_defers_work_until_the_deadline_forces_it():
    # with a one-interval lookahead and no price signal in view, nothing
    # runs until the remaining spare capacity equals the backlog
    grid = grid_of(3)
    plant = small_plant()
    curve = identity_curve(60.0)
    traces = traces_of(eta=[0.0] * 3, rigid=[0.0] * 3, flex=[60.0], lmp=[0.1] * 3)
    tariff = wholesale(traces.lmp_usd_per_kwh)
    timeline = run_mpc(
        plant, curve, grid, traces, tariff,
        policy=MpcPolicy(commit_mode="commit-first-interval", lookahead=1),
    )
    assert np.allclose(timeline.deferrable_work, [0.0, 0.0, 60.0])
    assert timeline.import_kw[2] == pytest.approx(60.0)


def test_committed_intervals_are_logged(caplog):
    grid = grid_of(2)
    plant = small_plant()
    curve = identity_curve(60.0)
    traces = traces_of(eta=[0.5, 0.5], rigid=[10.0, 10.0], flex=[0.0], lmp=[0.1, 0.1])
    with caplog.at_level(logging.DEBUG, logger="dcems.mpc"):
        run_mpc(plant, curve, grid, traces, wholesale(traces.lmp_usd_per_kwh))
    pattern = r"mpc t=0 pd=\d+\.\d{3} im=\d+\.\d{3} ex=\d+\.\d{3} wdf=\d+\.\d{3} cost=-?\d+\.\d{2}"
    assert re.search(pattern, caplog.text), caplog.text
    assert "mpc t=1" in caplog.text
