"""Shared domain types.

Unit conventions, used everywhere except report boundaries:

- power in kW, energy in kWh, money in USD, time in hours
- compute work in GFLOP-equivalents; one unit of processing rate equals one
  GFLOP-equivalent per hour, so work = rate * hours with no extra factor
- capacity factors are dimensionless fractions of nameplate capacity

Settlement reports convert energy totals to MWh for readability; nothing
else converts units. Containers here hold data and derived conveniences
only. Cross-field sanity checking is deliberately left to
:func:`dcems.validation.validate_config` so that malformed inputs can be
constructed and reported on instead of exploding in ``__init__``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

#: Absolute tolerance (kW, kWh or work units) for every "holds exactly"
#: invariant: complementarity, energy balance, deferrable completion.
FEASIBILITY_TOL = 1e-6


def _as_float_array(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class TimeGrid:
    """Uniform discretization of the simulation span."""

    interval_hours: float = 0.25  # length of one settlement interval
    horizon_intervals: int = 96  # intervals per optimization horizon (billing day)
    total_intervals: int = 2976  # intervals in the full simulation span

    def __post_init__(self) -> None:
        if self.interval_hours <= 0:
            raise ValueError("interval_hours must be positive")
        if self.horizon_intervals < 1:
            raise ValueError("horizon_intervals must be at least 1")
        if self.total_intervals < 1:
            raise ValueError("total_intervals must be at least 1")
        if self.total_intervals % self.horizon_intervals != 0:
            raise ValueError(
                "total_intervals (%d) must be a whole number of horizons "
                "(%d intervals each)" % (self.total_intervals, self.horizon_intervals)
            )

    @property
    def num_horizons(self) -> int:
        return self.total_intervals // self.horizon_intervals

    @property
    def horizon_hours(self) -> float:
        return self.interval_hours * self.horizon_intervals

    def horizon_slice(self, h: int) -> slice:
        if not 0 <= h < self.num_horizons:
            raise IndexError(f"horizon {h} out of range [0, {self.num_horizons})")
        start = h * self.horizon_intervals
        return slice(start, start + self.horizon_intervals)


@dataclass(frozen=True)
class PlantConfig:
    """Static ratings of the data center, its renewable plant and the grid tie.

    ``net_lower_kw``/``net_upper_kw`` override the allowed range of the net
    grid exchange ``dc_power + export - import`` per interval. When left as
    ``None`` the default behind-the-meter policy applies: the lower bound is
    0 (the site never backfeeds more than it exports on purpose) and the
    upper bound is the renewable output available that interval, i.e. the
    site draw plus exports may not exceed imports plus renewable production,
    with curtailment of surplus renewables allowed.
    """

    dc_capacity_kw: float  # nameplate IT load ceiling, == curve domain end
    renewable_capacity_kw: float  # nameplate renewable rating (Q_R)
    dc_power_min_kw: float = 0.0  # hard floor on server-hall draw
    dc_power_max_kw: Optional[float] = None  # per-interval draw cap, default nameplate
    import_max_kw: float = float("inf")  # grid tie limit, buying
    export_max_kw: float = float("inf")  # grid tie limit, selling
    net_lower_kw: Optional[float] = None  # override, see class docstring
    net_upper_kw: Optional[float] = None  # override, see class docstring

    @property
    def dc_power_ceiling_kw(self) -> float:
        return self.dc_capacity_kw if self.dc_power_max_kw is None else self.dc_power_max_kw

    def net_bounds(self, renewable_kw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-interval (lower, upper) bounds on net exchange.

        ``renewable_kw`` is the available renewable output per interval.
        """
        renewable_kw = np.asarray(renewable_kw, dtype=float)
        if self.net_lower_kw is None:
            lower = np.zeros_like(renewable_kw)
        else:
            lower = np.full_like(renewable_kw, self.net_lower_kw)
        if self.net_upper_kw is None:
            upper = renewable_kw.copy()
        else:
            upper = np.full_like(renewable_kw, self.net_upper_kw)
        return lower, upper


@dataclass
class RenewableTrace:
    """Per-interval renewable availability as a fraction of nameplate."""

    capacity_factor: np.ndarray

    def __post_init__(self) -> None:
        self.capacity_factor = _as_float_array(self.capacity_factor)

    def output_kw(self, plant: PlantConfig) -> np.ndarray:
        return self.capacity_factor * plant.renewable_capacity_kw


@dataclass
class WorkloadTrace:
    """Compute demand split into a rigid stream and a per-horizon flexible pool.

    ``nondeferrable`` is work that must run in its own interval (length =
    total_intervals). ``deferrable_per_horizon`` is the total flexible work
    due by the end of each horizon (length = num_horizons); the optimizer
    chooses when inside the horizon it runs.
    """

    nondeferrable: np.ndarray
    deferrable_per_horizon: np.ndarray

    def __post_init__(self) -> None:
        self.nondeferrable = _as_float_array(self.nondeferrable)
        self.deferrable_per_horizon = _as_float_array(self.deferrable_per_horizon)


@dataclass
class WholesaleTariff:
    """Pay/receive the nodal price for every kWh exchanged; no demand charge."""

    lmp_usd_per_kwh: np.ndarray

    def __post_init__(self) -> None:
        self.lmp_usd_per_kwh = _as_float_array(self.lmp_usd_per_kwh)


@dataclass
class RetailTariff:
    """Separate buy/sell energy rates plus a monthly peak-demand charge."""

    import_rate_usd_per_kwh: np.ndarray
    export_rate_usd_per_kwh: np.ndarray
    demand_charge_usd_per_kw: float = 0.0  # applied to the max import over the span

    def __post_init__(self) -> None:
        self.import_rate_usd_per_kwh = _as_float_array(self.import_rate_usd_per_kwh)
        self.export_rate_usd_per_kwh = _as_float_array(self.export_rate_usd_per_kwh)


Tariff = Union[WholesaleTariff, RetailTariff]


@dataclass
class TraceSet:
    """Bundle of all the exogenous series a simulation consumes."""

    renewable: RenewableTrace
    workload: WorkloadTrace
    lmp_usd_per_kwh: Optional[np.ndarray] = None
    import_rate_usd_per_kwh: Optional[np.ndarray] = None
    export_rate_usd_per_kwh: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("lmp_usd_per_kwh", "import_rate_usd_per_kwh", "export_rate_usd_per_kwh"):
            val = getattr(self, name)
            if val is not None:
                setattr(self, name, _as_float_array(val))


@dataclass
class Schedule:
    """Decided dispatch for one optimization horizon (all arrays length T)."""

    dc_power_kw: np.ndarray
    import_kw: np.ndarray
    export_kw: np.ndarray
    deferrable_work: np.ndarray  # flexible work executed per interval
    objective_usd: float = 0.0  # market profit of this horizon (negative = cost)
    price_inversion: bool = False  # an export rate exceeded the import rate

    def __post_init__(self) -> None:
        self.dc_power_kw = _as_float_array(self.dc_power_kw)
        self.import_kw = _as_float_array(self.import_kw)
        self.export_kw = _as_float_array(self.export_kw)
        self.deferrable_work = _as_float_array(self.deferrable_work)

    @property
    def num_intervals(self) -> int:
        return len(self.dc_power_kw)

    @property
    def net_exchange_kw(self) -> np.ndarray:
        return self.dc_power_kw + self.export_kw - self.import_kw


@dataclass
class DispatchTimeline:
    """Realized dispatch over the full simulation span.

    ``renewable_kw`` records the realized renewable output the dispatch was
    settled against, so settlement functions need no second look at the
    traces. ``horizon_peak_kw[h]`` is the running import peak at the end of
    horizon ``h`` (used to reconcile incremental demand charges).
    """

    dc_power_kw: np.ndarray
    import_kw: np.ndarray
    export_kw: np.ndarray
    deferrable_work: np.ndarray
    work_done: np.ndarray  # total work per interval, rigid + flexible
    renewable_kw: np.ndarray
    horizon_peak_kw: np.ndarray

    def __post_init__(self) -> None:
        for name in (
            "dc_power_kw",
            "import_kw",
            "export_kw",
            "deferrable_work",
            "work_done",
            "renewable_kw",
            "horizon_peak_kw",
        ):
            setattr(self, name, _as_float_array(getattr(self, name)))

    @property
    def num_intervals(self) -> int:
        return len(self.dc_power_kw)

    @property
    def peak_import_kw(self) -> float:
        return float(np.max(self.import_kw)) if len(self.import_kw) else 0.0


@dataclass
class SettlementReport:
    """Billing summary for one (market, configuration) pair."""

    market: str  # "wholesale" | "retail"
    configuration: str  # "no-colocation" | "colocation" | "optimal" | ...
    imported_mwh: float
    exported_mwh: float
    self_consumed_mwh: float  # renewable output absorbed on site
    peak_import_kw: float
    energy_cost_usd: float  # positive = site pays
    demand_charge_usd: float
    net_cost_usd: float
    pct_savings_vs_baseline: Optional[float] = None
    investment_adjusted_savings_usd: Optional[float] = None

    field_order = (
        "market",
        "configuration",
        "imported_mwh",
        "exported_mwh",
        "self_consumed_mwh",
        "peak_import_kw",
        "energy_cost_usd",
        "demand_charge_usd",
        "net_cost_usd",
        "pct_savings_vs_baseline",
        "investment_adjusted_savings_usd",
    )

    def as_row(self) -> dict:
        return {name: getattr(self, name) for name in self.field_order}
