"""Energy-management simulator for a renewable-colocated data center.

The package dispatches a data center with on-site renewable generation
against wholesale or retail electricity prices: a bounded-variable LP
optimizes each scheduling horizon, a rolling controller commits the
plan against realized conditions, and a settlement layer turns the
resulting timeline into billing quantities. Two non-optimized baseline
configurations and sensitivity sweeps support side-by-side studies.
"""

from .baselines import (
    deferrable_arrivals,
    simulate_colocation_greedy,
    simulate_no_colocation,
    zero_renewable,
)
from .curve import CurveError, PowerOutOfRange, ProcessingCurve, WorkExceedsCapacity
from .horizon import (
    DispatchError,
    HorizonProblem,
    InfeasibleHorizon,
    build_lp,
    evaluate_schedule,
    net_flows,
    solve_horizon,
)
from .lp import (
    LinearProgram,
    LpError,
    LpNumericalError,
    LpSolution,
    check_solution,
    solve,
)
from .mpc import (
    MpcPolicy,
    PerfectForesight,
    PersistenceForecast,
    UnrepairableInterval,
    perfect_foresight,
    persistence_forecast,
    run_mpc,
)
from .runner import build_tariff, run_comparison, run_configuration
from .sensitivity import (
    MarketCosts,
    SweepPoint,
    resplit_deferrable,
    scale_curve,
    scale_plant,
    scale_traces,
    sweep_capacity_ratio,
    sweep_deferrable_fraction,
    sweep_to_csv,
)
from .settlement import (
    SettlementReport,
    compare_configurations,
    default_amortized_cost,
    reports_from_csv,
    reports_from_json,
    reports_to_csv,
    reports_to_json,
    settle_retail,
    settle_wholesale,
)
from .traceio import (
    load_scenario,
    load_traces,
    read_results,
    Scenario,
    synth_traces,
    TraceParseError,
    write_results,
    write_traces,
)
from .types import (
    DispatchTimeline,
    PlantConfig,
    RenewableTrace,
    RetailTariff,
    Schedule,
    TimeGrid,
    TraceSet,
    WholesaleTariff,
    WorkloadTrace,
)
from .validation import ConfigError, check_timeline, require_valid_config, validate_config

__version__ = "0.1.0"

__all__ = [
    "CurveError",
    "ConfigError",
    "DispatchError",
    "DispatchTimeline",
    "HorizonProblem",
    "InfeasibleHorizon",
    "LinearProgram",
    "LpError",
    "LpNumericalError",
    "LpSolution",
    "MarketCosts",
    "MpcPolicy",
    "PerfectForesight",
    "PersistenceForecast",
    "PlantConfig",
    "PowerOutOfRange",
    "ProcessingCurve",
    "RenewableTrace",
    "RetailTariff",
    "Scenario",
    "Schedule",
    "SweepPoint",
    "SettlementReport",
    "TimeGrid",
    "TraceParseError",
    "TraceSet",
    "UnrepairableInterval",
    "WholesaleTariff",
    "WorkExceedsCapacity",
    "WorkloadTrace",
    "build_lp",
    "build_tariff",
    "check_solution",
    "check_timeline",
    "compare_configurations",
    "default_amortized_cost",
    "deferrable_arrivals",
    "evaluate_schedule",
    "load_scenario",
    "load_traces",
    "net_flows",
    "perfect_foresight",
    "persistence_forecast",
    "read_results",
    "reports_from_csv",
    "reports_from_json",
    "reports_to_csv",
    "reports_to_json",
    "require_valid_config",
    "resplit_deferrable",
    "run_comparison",
    "run_configuration",
    "run_mpc",
    "scale_curve",
    "scale_plant",
    "scale_traces",
    "settle_retail",
    "settle_wholesale",
    "simulate_colocation_greedy",
    "simulate_no_colocation",
    "solve",
    "solve_horizon",
    "sweep_capacity_ratio",
    "sweep_deferrable_fraction",
    "sweep_to_csv",
    "synth_traces",
    "validate_config",
    "write_results",
    "write_traces",
    "zero_renewable",
]
