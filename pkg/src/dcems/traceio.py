"""Trace and configuration I/O plus seeded synthetic trace generation.

Trace files are two-column CSVs with a unit-bearing header::

    timestamp,value_fraction
    2025-07-01T00:00:00Z,0.42

Timestamps are UTC ISO-8601, strictly increasing, evenly spaced. A series
sampled coarser than the simulation grid (for example hourly retail rates
on a 15-minute grid) is resampled by step-hold as long as its spacing is a
whole multiple of the grid interval; finer-than-grid series are rejected.
Inside the package everything is index-based; timestamps exist only here.

The scenario configuration is one TOML file; see the README for the full
key set. Paths inside it are resolved relative to the file itself.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .curve import ProcessingCurve
from .mpc import MpcPolicy
from .settlement import (
    default_amortized_cost,
    reports_from_csv,
    reports_from_json,
    reports_to_csv,
    reports_to_json,
)
from .types import (
    PlantConfig,
    RenewableTrace,
    TimeGrid,
    TraceSet,
    WorkloadTrace,
)
from .validation import ConfigError

DEFAULT_EPOCH = datetime(2025, 7, 1, tzinfo=timezone.utc)

#: expected header unit per trace kind
_UNITS = {
    "renewable": "value_fraction",
    "nondeferrable": "value_work",
    "deferrable": "value_work",
    "lmp": "value_usd_per_kwh",
    "import_rate": "value_usd_per_kwh",
    "export_rate": "value_usd_per_kwh",
}
SYNTH_PROFILES = ("windy", "diurnal-solar", "flat")
RESULT_FORMATS = ("csv", "json")


class TraceParseError(ValueError):
    """Malformed trace file; message carries path and line number."""


def _parse_timestamp(text: str, path: Path, line_no: int) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise TraceParseError(f"{path}:{line_no}: bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        raise TraceParseError(f"{path}:{line_no}: timestamp {text!r} lacks a timezone")
    return ts


def parse_trace_csv(path, expected_unit: str) -> tuple[np.ndarray, np.ndarray]:
    """Read one trace file; returns (epoch-seconds, values)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"trace file not found: {path}")
    lines = path.read_text().splitlines()
    if not lines:
        raise TraceParseError(f"{path}:1: empty trace file")
    header = [h.strip() for h in lines[0].split(",")]
    if header != ["timestamp", expected_unit]:
        raise TraceParseError(
            f"{path}:1: header {lines[0]!r} does not match expected "
            f"'timestamp,{expected_unit}'"
        )
    times, values = [], []
    prev = None
    spacing = None
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise TraceParseError(f"{path}:{i}: expected 2 columns, got {len(cells)}")
        ts = _parse_timestamp(cells[0].strip(), path, i)
        try:
            val = float(cells[1])
        except ValueError:
            raise TraceParseError(f"{path}:{i}: bad value {cells[1]!r}") from None
        if prev is not None:
            delta = (ts - prev).total_seconds()
            if delta <= 0:
                kind = "duplicate" if delta == 0 else "out-of-order"
                raise TraceParseError(f"{path}:{i}: {kind} timestamp {cells[0]!r}")
            if spacing is None:
                spacing = delta
            elif abs(delta - spacing) > 1e-6:
                raise TraceParseError(
                    f"{path}:{i}: irregular spacing {delta:g} s (expected {spacing:g} s); "
                    "gap or duplicate row"
                )
        prev = ts
        times.append(ts.timestamp())
        values.append(val)
    if not values:
        raise TraceParseError(f"{path}:2: no data rows")
    return np.array(times), np.array(values)


def _resample(
    values: np.ndarray,
    spacing_hours: Optional[float],
    target_dt_hours: float,
    target_len: int,
    path,
) -> np.ndarray:
    """Step-hold a coarser series onto the grid; passthrough when aligned."""
    if spacing_hours is None:  # single row: only valid when one value is wanted
        spacing_hours = target_dt_hours
    ratio = spacing_hours / target_dt_hours
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
        raise TraceParseError(
            f"{path}: spacing {spacing_hours:g} h is not a whole multiple of the "
            f"grid interval {target_dt_hours:g} h"
        )
    k = int(round(ratio))
    out = np.repeat(values, k)
    if len(out) != target_len:
        raise TraceParseError(
            f"{path}: {len(values)} rows at {spacing_hours:g} h cover "
            f"{len(out)} grid intervals, expected {target_len}"
        )
    return out


def _load_series(path, kind: str, target_dt: float, target_len: int) -> np.ndarray:
    times, values = parse_trace_csv(path, _UNITS[kind])
    spacing = (times[1] - times[0]) / 3600.0 if len(times) > 1 else None
    return _resample(values, spacing, target_dt, target_len, path)


def load_traces(paths: dict, grid: TimeGrid) -> TraceSet:
    """Load and grid-align every series named in ``paths``.

    Required keys: renewable, nondeferrable, deferrable. Optional: lmp,
    import_rate, export_rate. Values are paths to trace CSVs.
    """
    for key in ("renewable", "nondeferrable", "deferrable"):
        if key not in paths:
            raise ConfigError(f"missing required trace path {key!r}")
    dt, N = grid.interval_hours, grid.total_intervals
    eta = _load_series(paths["renewable"], "renewable", dt, N)
    rigid = _load_series(paths["nondeferrable"], "nondeferrable", dt, N)
    flex = _load_series(
        paths["deferrable"], "deferrable", grid.horizon_hours, grid.num_horizons
    )

    def optional(key):
        return _load_series(paths[key], key, dt, N) if key in paths else None

    return TraceSet(
        renewable=RenewableTrace(eta),
        workload=WorkloadTrace(rigid, flex),
        lmp_usd_per_kwh=optional("lmp"),
        import_rate_usd_per_kwh=optional("import_rate"),
        export_rate_usd_per_kwh=optional("export_rate"),
    )


def write_traces(
    traces: TraceSet, grid: TimeGrid, out_dir, epoch: datetime = DEFAULT_EPOCH
) -> dict:
    """Write every series of ``traces`` as CSV files; returns {kind: path}."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}

    def emit(kind: str, values: np.ndarray, step_hours: float):
        path = out_dir / f"{kind}.csv"
        rows = [f"timestamp,{_UNITS[kind]}"]
        for i, v in enumerate(values):
            ts = epoch + timedelta(hours=i * step_hours)
            rows.append(f"{ts.strftime('%Y-%m-%dT%H:%M:%SZ')},{float(v)!r}")
        path.write_text("\n".join(rows) + "\n")
        written[kind] = path

    emit("renewable", traces.renewable.capacity_factor, grid.interval_hours)
    emit("nondeferrable", traces.workload.nondeferrable, grid.interval_hours)
    emit("deferrable", traces.workload.deferrable_per_horizon, grid.horizon_hours)
    if traces.lmp_usd_per_kwh is not None:
        emit("lmp", traces.lmp_usd_per_kwh, grid.interval_hours)
    if traces.import_rate_usd_per_kwh is not None:
        emit("import_rate", traces.import_rate_usd_per_kwh, grid.interval_hours)
    if traces.export_rate_usd_per_kwh is not None:
        emit("export_rate", traces.export_rate_usd_per_kwh, grid.interval_hours)
    return written


def _ar1(rng, n: int, rho: float, sigma: float) -> np.ndarray:
    noise = rng.normal(0.0, sigma, n)
    out = np.zeros(n)
    for i in range(1, n):
        out[i] = rho * out[i - 1] + noise[i]
    return out


def synth_traces(
    seed: int,
    grid: TimeGrid,
    profile: str,
    deferrable_fraction: float = 0.40,
    workload_shape: str = "diurnal",
    max_work_per_interval: float = 40_000.0,
    nonnegative_prices: bool = False,
) -> TraceSet:
    """Deterministic synthetic traces for a given seed.

    ``profile`` shapes the renewable capacity factor: ``windy`` is a
    persistent broad-band series, ``diurnal-solar`` is zero at night with
    a noon bell, ``flat`` is a constant 0.5. Workload utilization is
    either ``diurnal`` (evening peak) or ``flat``; per-interval total work
    is utilization times ``max_work_per_interval``, split into rigid and
    flexible parts by ``deferrable_fraction``. The LMP series carries
    occasional negative spikes unless ``nonnegative_prices`` clips them;
    retail rates are a fixed hourly time-of-use schedule with the export
    rate strictly below the import rate.
    """
    if profile not in SYNTH_PROFILES:
        raise ValueError(f"unknown profile {profile!r}; choose from {SYNTH_PROFILES}")
    if workload_shape not in ("diurnal", "flat"):
        raise ValueError(f"unknown workload_shape {workload_shape!r}")
    if not 0.0 <= deferrable_fraction <= 1.0:
        raise ValueError("deferrable_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    N, dt = grid.total_intervals, grid.interval_hours
    hod = (np.arange(N) * dt) % 24.0  # hour of day

    if profile == "windy":
        eta = 0.48 + 0.12 * np.sin(2 * np.pi * (hod - 3) / 24.0) + _ar1(rng, N, 0.97, 0.055)
        eta = np.clip(eta, 0.0, 1.0)
    elif profile == "diurnal-solar":
        bell = np.where(
            (hod >= 6.0) & (hod <= 18.0), np.sin(np.pi * (hod - 6.0) / 12.0), 0.0
        )
        cloud = np.clip(0.8 + _ar1(rng, N, 0.9, 0.06), 0.0, 1.0)
        eta = np.clip(bell * cloud, 0.0, 1.0)
    else:  # flat
        eta = np.full(N, 0.5)

    lmp = (
        0.032
        + 0.022 * np.sin(2 * np.pi * (hod - 15) / 24.0)
        + _ar1(rng, N, 0.9, 0.006)
    )
    spikes = rng.random(N)
    lmp = np.where(spikes < 0.01, -rng.uniform(0.005, 0.05, N), lmp)
    lmp = np.where(spikes > 0.995, lmp + rng.uniform(0.05, 0.2, N), lmp)
    if nonnegative_prices:
        lmp = np.maximum(lmp, 0.0)

    tou = np.where(hod < 7, 0.06, np.where((hod >= 16) & (hod < 21), 0.16, 0.10))
    import_rate = tou
    export_rate = 0.5 * tou

    if workload_shape == "diurnal":
        util = (
            0.55
            + 0.18 * np.sin(2 * np.pi * (hod - 16) / 24.0)
            + _ar1(rng, N, 0.9, 0.025)
        )
        util = np.clip(util, 0.2, 0.92)
    else:
        util = np.full(N, 0.6)
    total = util * max_work_per_interval
    rigid = (1.0 - deferrable_fraction) * total
    flex = deferrable_fraction * np.add.reduceat(
        total, np.arange(0, N, grid.horizon_intervals)
    )
    return TraceSet(
        renewable=RenewableTrace(eta),
        workload=WorkloadTrace(rigid, flex),
        lmp_usd_per_kwh=lmp,
        import_rate_usd_per_kwh=import_rate,
        export_rate_usd_per_kwh=export_rate,
    )


@dataclass
class Scenario:
    """Everything a simulation run needs, as loaded from one config file."""

    grid: TimeGrid
    plant: PlantConfig
    curve: ProcessingCurve
    demand_charge_usd_per_kw: float
    amortized_cost_usd: float
    deferrable_fraction: float
    policy: MpcPolicy
    trace_paths: dict = field(default_factory=dict)

    def load_traces(self) -> TraceSet:
        return load_traces(self.trace_paths, self.grid)


def _require(table: dict, section: str, key: str):
    if key not in table:
        raise ConfigError(f"config is missing required key [{section}] {key}")
    return table[key]


def load_scenario(path) -> Scenario:
    """Parse the TOML scenario file; see README for the schema."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: not valid TOML: {exc}") from None

    for section in ("grid", "plant", "curve"):
        if section not in raw:
            raise ConfigError(f"config is missing required section [{section}]")
    g = raw["grid"]
    grid = TimeGrid(
        interval_hours=float(g.get("interval_hours", 0.25)),
        horizon_intervals=int(_require(g, "grid", "horizon_intervals")),
        total_intervals=int(_require(g, "grid", "total_intervals")),
    )
    p = raw["plant"]
    plant = PlantConfig(
        dc_capacity_kw=float(_require(p, "plant", "dc_capacity_kw")),
        renewable_capacity_kw=float(_require(p, "plant", "renewable_capacity_kw")),
        dc_power_min_kw=float(p.get("dc_power_min_kw", 0.0)),
        dc_power_max_kw=(
            float(p["dc_power_max_kw"]) if "dc_power_max_kw" in p else None
        ),
        import_max_kw=float(p.get("import_max_kw", float("inf"))),
        export_max_kw=float(p.get("export_max_kw", float("inf"))),
        net_lower_kw=float(p["net_lower_kw"]) if "net_lower_kw" in p else None,
        net_upper_kw=float(p["net_upper_kw"]) if "net_upper_kw" in p else None,
    )
    pts = _require(raw["curve"], "curve", "breakpoints")
    curve = ProcessingCurve.from_breakpoints([(float(a), float(b)) for a, b in pts])

    tariff = raw.get("tariff", {})
    demand_charge = float(tariff.get("demand_charge_usd_per_kw", 0.0))

    costs = raw.get("costs", {})
    amortized = float(
        costs.get(
            "amortized_renewable_usd_per_month",
            default_amortized_cost(plant.renewable_capacity_kw),
        )
    )
    workload = raw.get("workload", {})
    fraction = float(workload.get("deferrable_fraction", 0.40))

    m = raw.get("mpc", {})
    policy = MpcPolicy(
        commit_mode=m.get("commit_mode", "commit-full-horizon"),
        lookahead=int(m["lookahead"]) if "lookahead" in m else None,
    )

    trace_paths = {
        kind: (path.parent / rel if not Path(rel).is_absolute() else Path(rel))
        for kind, rel in raw.get("traces", {}).items()
    }
    for kind in trace_paths:
        if kind not in _UNITS:
            raise ConfigError(f"unknown trace kind {kind!r} in [traces]")
    return Scenario(
        grid=grid,
        plant=plant,
        curve=curve,
        demand_charge_usd_per_kw=demand_charge,
        amortized_cost_usd=amortized,
        deferrable_fraction=fraction,
        policy=policy,
        trace_paths=trace_paths,
    )


def write_results(reports: list, path, fmt: str = "csv") -> None:
    """Serialize settlement reports; ``fmt`` is ``csv`` or ``json``."""
    if fmt not in RESULT_FORMATS:
        raise ValueError(f"unknown result format {fmt!r}; supported: {RESULT_FORMATS}")
    text = reports_to_csv(reports) if fmt == "csv" else reports_to_json(reports)
    Path(path).write_text(text)


def read_results(path, fmt: Optional[str] = None) -> list:
    """Round-trip reader for :func:`write_results` output."""
    path = Path(path)
    if fmt is None:
        fmt = "json" if path.suffix.lower() == ".json" else "csv"
    if fmt not in RESULT_FORMATS:
        raise ValueError(f"unknown result format {fmt!r}; supported: {RESULT_FORMATS}")
    text = path.read_text()
    return reports_from_csv(text) if fmt == "csv" else reports_from_json(text)
