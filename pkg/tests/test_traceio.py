"""Trace CSV parsing, resampling, synthetic generation, and config loading."""

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from dcems import (
    ConfigError,
    TimeGrid,
    TraceParseError,
    load_scenario,
    load_traces,
    read_results,
    settle_wholesale,
    synth_traces,
    write_results,
    write_traces,
)
from dcems.traceio import parse_trace_csv

from helpers import grid_of, wholesale

EPOCH = datetime(2025, 7, 1, tzinfo=timezone.utc)


def trace_csv(path, unit, values, step_hours=0.25, start=EPOCH):
    rows = [f"timestamp,{unit}"]
    for i, v in enumerate(values):
        ts = start + timedelta(hours=i * step_hours)
        rows.append(f"{ts.strftime('%Y-%m-%dT%H:%M:%SZ')},{v}")
    path.write_text("\n".join(rows) + "\n")
    return path


def write_trace_set(tmp_path, grid, n_hor, eta=0.5, rigid=10.0, flex=20.0):
    dt = grid.interval_hours
    N = grid.total_intervals
    return {
        "renewable": trace_csv(tmp_path / "r.csv", "value_fraction", [eta] * N, dt),
        "nondeferrable": trace_csv(tmp_path / "n.csv", "value_work", [rigid] * N, dt),
        "deferrable": trace_csv(
            tmp_path / "d.csv", "value_work", [flex] * n_hor, grid.horizon_hours
        ),
    }


def test_aligned_file_passes_through_exactly(tmp_path):
    values = np.round(np.random.default_rng(1).uniform(0, 1, 96), 6)
    path = trace_csv(tmp_path / "eta.csv", "value_fraction", values, 0.25)
    _, parsed = parse_trace_csv(path, "value_fraction")
    assert np.array_equal(parsed, values)
    grid = grid_of(96, horizon=96, dt=0.25)
    paths = write_trace_set(tmp_path, grid, 1)
    paths["renewable"] = path
    traces = load_traces(paths, grid)
    assert np.array_equal(traces.renewable.capacity_factor, values)


def test_hourly_series_step_holds_onto_quarter_hour_grid(tmp_path):
    hourly = list(np.arange(24) / 100.0)
    grid = grid_of(96, horizon=96, dt=0.25)
    paths = write_trace_set(tmp_path, grid, 1)
    paths["lmp"] = trace_csv(tmp_path / "lmp.csv", "value_usd_per_kwh", hourly, 1.0)
    traces = load_traces(paths, grid)
    assert np.array_equal(traces.lmp_usd_per_kwh, np.repeat(hourly, 4))


def test_step_hold_keeps_the_containing_hour_value(tmp_path):
    rng = np.random.default_rng(5)
    source = rng.uniform(0, 1, 6)
    grid = grid_of(36, horizon=36, dt=0.5)  # 3h spacing onto 0.5h grid
    paths = write_trace_set(tmp_path, grid, 1)
    paths["renewable"] = trace_csv(tmp_path / "r2.csv", "value_fraction", source, 3.0)
    resampled = load_traces(paths, grid).renewable.capacity_factor
    for t in range(36):
        assert resampled[t] == source[t // 6]


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda rows: [rows[0], rows[2], rows[1], rows[3]], "out-of-order"),
        (lambda rows: [rows[0], rows[1], rows[1], rows[3]], "duplicate"),
        (lambda rows: rows[:3] + ["2025-07-01T04:00:00Z,0.4"], "irregular spacing"),
        (lambda rows: ["timestamp,value_kw"] + rows[1:], "does not match expected"),
        (lambda rows: [], "empty trace file"),
        (lambda rows: rows[:1], "no data rows"),
        (lambda rows: [rows[0], rows[1].replace("0.1", "zap")], "bad value"),
        (lambda rows: [rows[0], "2025-07-01T00:00:00,0.1"], "lacks a timezone"),
        (lambda rows: [rows[0], rows[1] + ",extra"], "expected 2 columns"),
        (lambda rows: [rows[0], "not-a-time,0.1"], "bad timestamp"),
    ],
)
def test_malformed_files_name_the_line(tmp_path, mutate, message):
    rows = [
        "timestamp,value_fraction",
        "2025-07-01T00:00:00Z,0.1",
        "2025-07-01T01:00:00Z,0.2",
        "2025-07-01T02:00:00Z,0.3",
    ]
    path = tmp_path / "bad.csv"
    text = "\n".join(mutate(rows))
    path.write_text(text + "\n" if text else "")
    with pytest.raises(TraceParseError, match=message) as err:
        parse_trace_csv(path, "value_fraction")
    assert "bad.csv:" in str(err.value)  # every parse error carries a line number


def test_out_of_order_error_names_the_first_bad_line(tmp_path):
    path = tmp_path / "shuffled.csv"
    path.write_text(
        "timestamp,value_fraction\n"
        "2025-07-01T00:00:00Z,0.1\n"
        "2025-07-01T02:00:00Z,0.2\n"
        "2025-07-01T01:00:00Z,0.3\n"
    )
    with pytest.raises(TraceParseError, match=r"shuffled\.csv:4"):
        parse_trace_csv(path, "value_fraction")


def test_missing_file_and_missing_kind(tmp_path):
    grid = grid_of(4)
    with pytest.raises(FileNotFoundError):
        parse_trace_csv(tmp_path / "absent.csv", "value_fraction")
    with pytest.raises(ConfigError, match="deferrable"):
        load_traces({"renewable": "x", "nondeferrable": "y"}, grid)


def test_series_finer_than_grid_is_rejected(tmp_path):
    grid = grid_of(4, dt=1.0)
    paths = write_trace_set(tmp_path, grid, 1)
    paths["renewable"] = trace_csv(
        tmp_path / "fine.csv", "value_fraction", [0.1] * 16, 0.25
    )
    with pytest.raises(TraceParseError, match="whole multiple"):
        load_traces(paths, grid)


def test_row_count_mismatch_is_reported(tmp_path):
    grid = grid_of(8, dt=1.0)
    paths = write_trace_set(tmp_path, grid, 1)
    paths["renewable"] = trace_csv(tmp_path / "short.csv", "value_fraction", [0.1] * 5, 1.0)
    with pytest.raises(TraceParseError, match="expected 8"):
        load_traces(paths, grid)


def test_write_load_write_is_byte_stable(tmp_path):
    grid = TimeGrid(interval_hours=0.25, horizon_intervals=96, total_intervals=192)
    traces = synth_traces(3, grid, "windy")
    first = write_traces(traces, grid, tmp_path / "a")
    loaded = load_traces(first, grid)
    second = write_traces(loaded, grid, tmp_path / "b")
    for kind, path in first.items():
        assert path.read_bytes() == second[kind].read_bytes(), kind


def test_synth_is_deterministic_per_seed():
    grid = grid_of(96, horizon=24, dt=1.0)
    a = synth_traces(11, grid, "windy")
    b = synth_traces(11, grid, "windy")
    c = synth_traces(12, grid, "windy")
    assert a.renewable.capacity_factor.tobytes() == b.renewable.capacity_factor.tobytes()
    assert a.lmp_usd_per_kwh.tobytes() == b.lmp_usd_per_kwh.tobytes()
    assert a.workload.nondeferrable.tobytes() == b.workload.nondeferrable.tobytes()
    assert a.renewable.capacity_factor.tobytes() != c.renewable.capacity_factor.tobytes()


def test_solar_profile_is_dark_at_night():
    grid = grid_of(96, horizon=24, dt=1.0)
    traces = synth_traces(4, grid, "diurnal-solar")
    hod = np.arange(96) % 24
    night = (hod < 6) | (hod > 18)
    eta = traces.renewable.capacity_factor
    assert np.all(eta[night] == 0.0)
    assert eta.max() > 0.3
    assert np.all((eta >= 0) & (eta <= 1))


def test_deferrable_fraction_controls_the_split():
    grid = grid_of(72, horizon=24, dt=1.0)
    none = synth_traces(9, grid, "windy", deferrable_fraction=0.0)
    assert np.all(none.workload.deferrable_per_horizon == 0.0)
    some = synth_traces(9, grid, "windy", deferrable_fraction=0.4)
    for h in range(3):
        rigid = some.workload.nondeferrable[24 * h : 24 * (h + 1)].sum()
        flex = some.workload.deferrable_per_horizon[h]
        assert flex / (flex + rigid) == pytest.approx(0.4, abs=1e-12)


def test_synth_price_sign_controls():
    grid = grid_of(744, horizon=24, dt=1.0)
    spiky = synth_traces(0, grid, "windy")
    assert spiky.lmp_usd_per_kwh.min() < 0.0
    clipped = synth_traces(0, grid, "windy", nonnegative_prices=True)
    assert clipped.lmp_usd_per_kwh.min() >= 0.0
    # retail schedule is time-of-use with export strictly under import
    assert np.all(clipped.export_rate_usd_per_kwh < clipped.import_rate_usd_per_kwh)


def test_synth_rejects_unknown_settings():
    grid = grid_of(4)
    with pytest.raises(ValueError, match="profile"):
        synth_traces(0, grid, "gusty")
    with pytest.raises(ValueError, match="workload_shape"):
        synth_traces(0, grid, "flat", workload_shape="spiky")
    with pytest.raises(ValueError, match="deferrable_fraction"):
        synth_traces(0, grid, "flat", deferrable_fraction=1.5)


SCENARIO_TOML = """
[grid]
interval_hours = 1.0
horizon_intervals = 4
total_intervals = 8

[plant]
dc_capacity_kw = 60.0
renewable_capacity_kw = 80.0
import_max_kw = 100.0
export_max_kw = 100.0

[curve]
breakpoints = [[0.0, 0.0], [60.0, 60.0]]

[tariff]
demand_charge_usd_per_kw = 12.39

[costs]
amortized_renewable_usd_per_month = 5000.0

[workload]
deferrable_fraction = 0.25

[mpc]
commit_mode = "commit-first-interval"
lookahead = 2

[traces]
renewable = "r.csv"
nondeferrable = "n.csv"
deferrable = "d.csv"
lmp = "lmp.csv"
"""


def test_load_scenario_happy_path(tmp_path):
    grid = grid_of(8, horizon=4, dt=1.0)
    paths = write_trace_set(tmp_path, grid, 2)
    trace_csv(tmp_path / "lmp.csv", "value_usd_per_kwh", [0.05] * 8, 1.0)
    cfg = tmp_path / "scenario.toml"
    cfg.write_text(SCENARIO_TOML)
    scenario = load_scenario(cfg)
    assert scenario.grid.total_intervals == 8
    assert scenario.plant.renewable_capacity_kw == 80.0
    assert scenario.curve.max_power_kw == 60.0
    assert scenario.demand_charge_usd_per_kw == 12.39
    assert scenario.amortized_cost_usd == 5000.0
    assert scenario.deferrable_fraction == 0.25
    assert scenario.policy.commit_mode == "commit-first-interval"
    assert scenario.policy.lookahead == 2
    # relative trace paths resolve against the config file
    traces = scenario.load_traces()
    assert np.allclose(traces.lmp_usd_per_kwh, 0.05)


def test_load_scenario_defaults(tmp_path):
    cfg = tmp_path / "minimal.toml"
    cfg.write_text(
        "[grid]\nhorizon_intervals = 96\ntotal_intervals = 96\n"
        "[plant]\ndc_capacity_kw = 100000.0\nrenewable_capacity_kw = 150000.0\n"
        "[curve]\nbreakpoints = [[0.0, 0.0], [100000.0, 100000.0]]\n"
    )
    scenario = load_scenario(cfg)
    assert scenario.grid.interval_hours == 0.25
    assert scenario.amortized_cost_usd == pytest.approx(2.46e6)
    assert scenario.deferrable_fraction == 0.40
    assert scenario.policy.commit_mode == "commit-full-horizon"
    assert scenario.trace_paths == {}


def test_load_scenario_errors(tmp_path):
    missing_section = tmp_path / "a.toml"
    missing_section.write_text("[plant]\ndc_capacity_kw = 1.0\n")
    with pytest.raises(ConfigError, match=r"\[grid\]"):
        load_scenario(missing_section)

    missing_key = tmp_path / "b.toml"
    missing_key.write_text(
        "[grid]\ntotal_intervals = 8\n[plant]\n[curve]\n"
    )
    with pytest.raises(ConfigError, match="horizon_intervals"):
        load_scenario(missing_key)

    bad_kind = tmp_path / "c.toml"
    bad_kind.write_text(
        "[grid]\nhorizon_intervals = 4\ntotal_intervals = 8\n"
        "[plant]\ndc_capacity_kw = 1.0\nrenewable_capacity_kw = 1.0\n"
        "[curve]\nbreakpoints = [[0.0, 0.0], [1.0, 1.0]]\n"
        "[traces]\nwind_gusts = \"g.csv\"\n"
    )
    with pytest.raises(ConfigError, match="wind_gusts"):
        load_scenario(bad_kind)

    not_toml = tmp_path / "d.toml"
    not_toml.write_text("grid = [unclosed\n")
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_scenario(not_toml)

    with pytest.raises(FileNotFoundError):
        load_scenario(tmp_path / "absent.toml")


def _report(name="optimal"):
    from test_settlement import timeline_of

    return settle_wholesale(
        timeline_of([10.0], [10.0], [0.0]), wholesale([0.1]), grid_of(1),
        configuration=name,
    )


def test_results_round_trip_and_suffix_inference(tmp_path):
    reports = [_report("no-colocation"), _report("optimal")]
    csv_path = tmp_path / "out.csv"
    json_path = tmp_path / "out.json"
    write_results(reports, csv_path, "csv")
    write_results(reports, json_path, "json")
    for path in (csv_path, json_path):
        back = read_results(path)  # format inferred from suffix
        assert [r.configuration for r in back] == ["no-colocation", "optimal"]
        assert back[0].net_cost_usd == pytest.approx(reports[0].net_cost_usd)


def test_unknown_result_format_lists_the_supported_ones(tmp_path):
    with pytest.raises(ValueError, match="csv"):
        write_results([_report()], tmp_path / "x.yaml", "yaml")
    with pytest.raises(ValueError, match="json"):
        read_results(tmp_path / "x.yaml", "yaml")
