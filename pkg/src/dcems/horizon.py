"""Profit-maximizing dispatch of one optimization horizon.

Given renewable availability, rigid and flexible compute demand, grid tie
limits and a tariff, choose per-interval data-center power, grid imports,
grid exports and flexible-work placement to maximize market profit
(equivalently, minimize energy cost). The problem is linear because the
power-to-compute curve is concave piecewise-linear: its hypograph is a set
of linear rows, and at an optimum the work variable presses against the
curve whenever work has value.

Variables per interval ``t``: dc power ``P_t``, import ``I_t``, export
``E_t``, flexible work ``w_t``; the retail market adds a single peak
variable ``M >= max(I_t, peak_so_far)`` so a monthly demand charge can be
priced inside the horizon as an increment over the peak already set.

Constraints:

- hypograph: ``w_t + rigid_t <= (slope_k P_t + intercept_k) * dt`` for all k
- net exchange: ``net_lower_t <= P_t + E_t - I_t <= net_upper_t`` where the
  defaults are 0 and the available renewable output (energy balance with
  curtailment allowed and no unpaid backfeed)
- flexible completion: ``sum_t w_t >= deferrable_total``
- box bounds on everything; the dc-power floor is lifted to the smallest
  power able to carry the interval's rigid work, which both tightens the
  relaxation and hands the solver a nearly feasible start

Two objective-neutral clean-up passes run after the solve: flows are netted
so no interval both imports and exports, and dc power is stripped down to
the smallest value that still supports the scheduled work and the net-
exchange lower bound. The reported objective is always recomputed from the
cleaned schedule, so if a tariff pays more for exports than imports cost
(flagged via ``Schedule.price_inversion``) the paper arbitrage the LP found
is discarded rather than reported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .curve import ProcessingCurve
from .lp import LinearProgram, LpSolution, solve as lp_solve
from .types import (
    FEASIBILITY_TOL,
    PlantConfig,
    RetailTariff,
    Schedule,
    Tariff,
    WholesaleTariff,
)


class DispatchError(Exception):
    """Horizon could not be dispatched."""


class InfeasibleHorizon(DispatchError):
    """No schedule satisfies the workload and grid constraints."""


@dataclass
class HorizonProblem:
    """One horizon's worth of inputs, already sliced to T intervals."""

    plant: PlantConfig
    curve: ProcessingCurve
    dt_hours: float
    capacity_factor: np.ndarray  # renewable availability, fraction of nameplate
    nondeferrable: np.ndarray  # rigid work per interval
    deferrable_total: float  # flexible work due by end of horizon
    tariff: Tariff  # price arrays sliced to the same T intervals
    peak_so_far_kw: float = 0.0  # import peak already set earlier in the month

    def __post_init__(self) -> None:
        self.capacity_factor = np.asarray(self.capacity_factor, dtype=float)
        self.nondeferrable = np.asarray(self.nondeferrable, dtype=float)
        T = len(self.capacity_factor)
        if len(self.nondeferrable) != T:
            raise ValueError("nondeferrable series length differs from capacity_factor")
        for arr in _tariff_arrays(self.tariff):
            if len(arr) != T:
                raise ValueError("tariff series length differs from the horizon")
        if self.dt_hours <= 0:
            raise ValueError("dt_hours must be positive")
        if self.deferrable_total < 0:
            raise ValueError("deferrable_total must be nonnegative")
        if self.peak_so_far_kw < 0:
            raise ValueError("peak_so_far_kw must be nonnegative")
        if isinstance(self.tariff, RetailTariff) and self.tariff.demand_charge_usd_per_kw < 0:
            raise ValueError("negative demand charge would make the model unbounded")

    @property
    def num_intervals(self) -> int:
        return len(self.capacity_factor)


@dataclass(frozen=True)
class HorizonLayout:
    """Column layout of the horizon LP: x = [P | I | E | w | (M)]."""

    num_intervals: int
    dc_power: slice
    imports: slice
    exports: slice
    flex_work: slice
    peak_var: Optional[int]  # column of M, retail only


def _tariff_arrays(tariff: Tariff) -> list:
    if isinstance(tariff, WholesaleTariff):
        return [tariff.lmp_usd_per_kwh]
    return [tariff.import_rate_usd_per_kwh, tariff.export_rate_usd_per_kwh]


def build_lp(problem: HorizonProblem) -> tuple[LinearProgram, HorizonLayout]:
    """Assemble the horizon program. Raises InfeasibleHorizon when the
    workload provably exceeds compute capacity before any grid questions
    arise; everything subtler is left for the solver to decide."""
    T = problem.num_intervals
    dt = problem.dt_hours
    plant, curve = problem.plant, problem.curve
    retail = isinstance(problem.tariff, RetailTariff)

    renewable_kw = problem.capacity_factor * plant.renewable_capacity_kw
    net_lo, net_up = plant.net_bounds(renewable_kw)
    rigid = problem.nondeferrable

    pd_cap = min(plant.dc_power_ceiling_kw, curve.max_power_kw)
    cap_work = curve.work(pd_cap, dt)
    over = rigid > cap_work + FEASIBILITY_TOL
    if np.any(over):
        t_bad = int(np.argmax(over))
        raise InfeasibleHorizon(
            f"non-deferrable work {rigid[t_bad]:.3f} at interval {t_bad} exceeds "
            f"the {cap_work:.3f} one interval can process"
        )
    pd_lo = np.maximum(curve.min_power_for_work(rigid, dt), plant.dc_power_min_kw)
    pd_hi = np.full(T, pd_cap)
    flex_cap = np.maximum(cap_work - rigid, 0.0)
    spare = float(flex_cap.sum())
    if problem.deferrable_total > spare + FEASIBILITY_TOL:
        raise InfeasibleHorizon(
            f"deferrable work {problem.deferrable_total:.3f} exceeds the horizon's "
            f"spare compute capacity {spare:.3f}"
        )

    n = 4 * T + (1 if retail else 0)
    sl_pd = slice(0, T)
    sl_im = slice(T, 2 * T)
    sl_ex = slice(2 * T, 3 * T)
    sl_w = slice(3 * T, 4 * T)
    col_M = 4 * T if retail else None
    layout = HorizonLayout(T, sl_pd, sl_im, sl_ex, sl_w, col_M)

    K = curve.num_segments
    m = T * K + 2 * T + 1 + (T if retail else 0)
    A = np.zeros((m, n))
    b = np.zeros(m)
    r = 0
    for k, (slope, intercept) in enumerate(curve.hypograph_rows()):
        rows = np.arange(r, r + T)
        A[rows, np.arange(3 * T, 4 * T)] = 1.0
        A[rows, np.arange(T)] = -slope * dt
        b[rows] = intercept * dt - rigid
        r += T
    rows = np.arange(r, r + T)  # net upper: P + E - I <= net_up
    A[rows, np.arange(T)] = 1.0
    A[rows, np.arange(2 * T, 3 * T)] = 1.0
    A[rows, np.arange(T, 2 * T)] = -1.0
    b[rows] = net_up
    r += T
    rows = np.arange(r, r + T)  # net lower: -(P + E - I) <= -net_lo
    A[rows, np.arange(T)] = -1.0
    A[rows, np.arange(2 * T, 3 * T)] = -1.0
    A[rows, np.arange(T, 2 * T)] = 1.0
    b[rows] = -net_lo
    r += T
    A[r, sl_w] = -1.0  # completion: sum w >= deferrable_total
    b[r] = -problem.deferrable_total
    r += 1
    if retail:
        rows = np.arange(r, r + T)  # peak tracking: I - M <= 0
        A[rows, np.arange(T, 2 * T)] = 1.0
        A[rows, col_M] = -1.0
        b[rows] = 0.0
        r += T

    lb = np.zeros(n)
    ub = np.zeros(n)
    lb[sl_pd] = pd_lo
    ub[sl_pd] = pd_hi
    ub[sl_im] = plant.import_max_kw
    ub[sl_ex] = plant.export_max_kw
    ub[sl_w] = flex_cap
    c = np.zeros(n)
    if retail:
        tariff = problem.tariff
        lb[col_M] = problem.peak_so_far_kw
        ub[col_M] = np.inf
        c[sl_im] = -tariff.import_rate_usd_per_kwh * dt
        c[sl_ex] = tariff.export_rate_usd_per_kwh * dt
        c[col_M] = -tariff.demand_charge_usd_per_kw
    else:
        lmp = problem.tariff.lmp_usd_per_kwh
        c[sl_im] = -lmp * dt
        c[sl_ex] = lmp * dt

    lp = LinearProgram(c=c, A=A, senses=["<="] * m, b=b, lb=lb, ub=ub)
    return lp, layout


def net_flows(import_kw: np.ndarray, export_kw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cancel simultaneous import and export, preserving the difference."""
    net = import_kw - export_kw
    return np.maximum(net, 0.0), np.maximum(-net, 0.0)


def net_complementarity(schedule: Schedule, tariff: Optional[Tariff] = None) -> Schedule:
    """Return a copy of ``schedule`` whose flows never overlap in time.

    Netting preserves ``import - export`` per interval, so every balance
    and net-exchange constraint still holds, and for any tariff whose
    export rate does not exceed its import rate the objective can only
    improve. The ``objective_usd`` field is carried over unchanged; callers
    who need it exact afterwards should use :func:`evaluate_schedule`.
    """
    im, ex = net_flows(schedule.import_kw, schedule.export_kw)
    return Schedule(
        dc_power_kw=schedule.dc_power_kw.copy(),
        import_kw=im,
        export_kw=ex,
        deferrable_work=schedule.deferrable_work.copy(),
        objective_usd=schedule.objective_usd,
        price_inversion=schedule.price_inversion,
    )


def strip_idle_power(schedule: Schedule, problem: HorizonProblem) -> Schedule:
    """Lower dc power to the least value supporting the scheduled work.

    The floor honors the dc minimum, the power the curve needs for the
    interval's total work, and the net-exchange lower bound given the
    scheduled flows. dc power has no objective coefficient, so this is
    value-neutral; it exists so reported schedules do not burn power the
    optimizer happened to leave lying around at a degenerate vertex.
    """
    plant, curve, dt = problem.plant, problem.curve, problem.dt_hours
    work = problem.nondeferrable + schedule.deferrable_work
    net_lo, _ = plant.net_bounds(problem.capacity_factor * plant.renewable_capacity_kw)
    floor = np.maximum(curve.min_power_for_work(work, dt), plant.dc_power_min_kw)
    floor = np.maximum(floor, net_lo + schedule.import_kw - schedule.export_kw)
    return Schedule(
        dc_power_kw=np.minimum(schedule.dc_power_kw, np.maximum(floor, 0.0)),
        import_kw=schedule.import_kw.copy(),
        export_kw=schedule.export_kw.copy(),
        deferrable_work=schedule.deferrable_work.copy(),
        objective_usd=schedule.objective_usd,
        price_inversion=schedule.price_inversion,
    )


def evaluate_schedule(problem: HorizonProblem, schedule: Schedule) -> float:
    """Market profit of a schedule under the problem's tariff.

    Retail includes the demand-charge increment this horizon adds over
    ``peak_so_far_kw``; wholesale is pure energy arbitrage. Negative values
    are net costs.
    """
    dt = problem.dt_hours
    im, ex = schedule.import_kw, schedule.export_kw
    if isinstance(problem.tariff, WholesaleTariff):
        lmp = problem.tariff.lmp_usd_per_kwh
        return float(np.sum(lmp * (ex - im)) * dt)
    tariff = problem.tariff
    energy = float(
        np.sum(tariff.export_rate_usd_per_kwh * ex - tariff.import_rate_usd_per_kwh * im) * dt
    )
    peak = max(problem.peak_so_far_kw, float(im.max()) if len(im) else 0.0)
    increment = peak - problem.peak_so_far_kw
    return energy - tariff.demand_charge_usd_per_kw * increment


def solve_horizon(
    problem: HorizonProblem, max_iterations: Optional[int] = None
) -> Schedule:
    """Optimal cleaned-up schedule for one horizon.

    Raises :class:`InfeasibleHorizon` when no schedule exists and
    :class:`DispatchError` on solver-level trouble.
    """
    lp, layout = build_lp(problem)
    sol: LpSolution = lp_solve(lp, max_iterations)
    if sol.status == "infeasible":
        raise InfeasibleHorizon(
            "no feasible schedule: grid-tie and net-exchange limits cannot "
            "support the required work in every interval"
        )
    if sol.status != "optimal":
        raise DispatchError(f"horizon solve ended {sol.status}")

    inversion = False
    if isinstance(problem.tariff, RetailTariff):
        inversion = bool(
            np.any(
                problem.tariff.export_rate_usd_per_kwh
                > problem.tariff.import_rate_usd_per_kwh + 1e-12
            )
        )
    schedule = Schedule(
        dc_power_kw=sol.x[layout.dc_power],
        import_kw=sol.x[layout.imports],
        export_kw=sol.x[layout.exports],
        deferrable_work=sol.x[layout.flex_work],
        price_inversion=inversion,
    )
    schedule = net_complementarity(schedule, problem.tariff)
    # Guard for pathological tariffs: if overlapping flows somehow survive
    # netting, re-solve with exports capped at the on-site surplus until
    # complementarity holds. Netting cancels overlap exactly, so this loop
    # does not run in practice; it is the documented fallback.
    reruns = 0
    while (
        np.any(np.minimum(schedule.import_kw, schedule.export_kw) > FEASIBILITY_TOL)
        and reruns < layout.num_intervals
    ):
        renewable_kw = problem.capacity_factor * problem.plant.renewable_capacity_kw
        ex_cap = np.maximum(
            renewable_kw - schedule.dc_power_kw + schedule.import_kw, 0.0
        )
        capped = lp.ub.copy()
        capped[layout.exports] = np.minimum(capped[layout.exports], ex_cap)
        lp = LinearProgram(c=lp.c, A=lp.A, senses=lp.senses, b=lp.b, lb=lp.lb, ub=capped)
        sol = lp_solve(lp, max_iterations)
        if sol.status != "optimal":
            raise DispatchError(f"rerun with capped exports ended {sol.status}")
        schedule = net_complementarity(
            Schedule(
                dc_power_kw=sol.x[layout.dc_power],
                import_kw=sol.x[layout.imports],
                export_kw=sol.x[layout.exports],
                deferrable_work=sol.x[layout.flex_work],
                price_inversion=inversion,
            ),
            problem.tariff,
        )
        reruns += 1
    schedule = strip_idle_power(schedule, problem)
    schedule.objective_usd = evaluate_schedule(problem, schedule)
    return schedule
