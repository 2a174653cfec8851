"""Self-contained solver for bounded-variable linear programs.

Implements a two-phase primal simplex over a dense numpy tableau, with
general two-sided variable bounds handled directly (no variable splitting):
nonbasic variables rest at either their lower or upper bound, and an
entering step may terminate in a "bound flip" that never touches the basis.
Phase 1 maximizes minus the sum of artificial variables; artificials are
only added to rows whose natural slack start is infeasible, so well-scaled
problems enter phase 2 almost immediately.

Pricing is Dantzig (most-improving reduced cost) and permanently falls back
to Bland's smallest-index rule once 3 * (rows + cols) consecutive
iterations pass without objective improvement, which guarantees
termination on degenerate problems.

Conventions:

- problems are maximizations; negate ``c`` to minimize
- row senses are "<=", ">=" or "="
- every variable needs at least one finite bound (free variables are not
  supported; the dispatch problems built on top never produce one)
- duals follow the max convention: ``duals[i]`` is the increase in optimal
  objective per unit increase of ``b[i]``, so "<=" rows carry nonnegative
  duals at an optimum

Tolerances: reduced costs within ``OPTIMALITY_TOL`` of zero do not qualify
for entering; a phase-1 residual above ``FEASIBILITY_TOL * (1 + |b|)``
means infeasible; tableau entries below ``PIVOT_TOL`` are never pivots.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

OPTIMALITY_TOL = 1e-7
FEASIBILITY_TOL = 1e-7
PIVOT_TOL = 1e-9

_SENSES = ("<=", ">=", "=")


class LpError(Exception):
    """Base class for solver failures (as opposed to model statuses)."""


class LpNumericalError(LpError):
    """Iteration limit hit or the basis factorization fell apart."""


@dataclass
class LinearProgram:
    """maximize c @ x  subject to  A x (senses) b,  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: list
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self) -> None:
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        self.lb = np.atleast_1d(np.asarray(self.lb, dtype=float))
        self.ub = np.atleast_1d(np.asarray(self.ub, dtype=float))
        n = len(self.c)
        if self.A.size == 0:
            self.A = self.A.reshape(0, n)
        m = self.A.shape[0]
        self.senses = ["=" if s == "==" else s for s in self.senses]
        if self.A.shape != (m, n):
            raise LpError(f"A has shape {self.A.shape}, expected ({m}, {n})")
        if len(self.b) != m or len(self.senses) != m:
            raise LpError("b and senses must match the number of rows of A")
        if len(self.lb) != n or len(self.ub) != n:
            raise LpError("lb and ub must match the number of variables")
        for s in self.senses:
            if s not in _SENSES:
                raise LpError(f"unknown row sense {s!r}")
        if not np.all(np.isfinite(self.c)):
            raise LpError("objective coefficients must be finite")
        if not np.all(np.isfinite(self.b)):
            raise LpError("right-hand sides must be finite")
        if not np.all(np.isfinite(self.A)):
            raise LpError("constraint coefficients must be finite")
        if np.any(self.lb > self.ub + 1e-12):
            bad = int(np.argmax(self.lb - self.ub))
            raise LpError(f"variable {bad} has lb {self.lb[bad]} > ub {self.ub[bad]}")
        if np.any(np.isneginf(self.lb) & np.isposinf(self.ub)):
            bad = int(np.argmax(np.isneginf(self.lb) & np.isposinf(self.ub)))
            raise LpError(f"variable {bad} is free; give it at least one finite bound")

    @property
    def num_vars(self) -> int:
        return len(self.c)

    @property
    def num_rows(self) -> int:
        return self.A.shape[0]


@dataclass
class LpSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[np.ndarray]
    objective: Optional[float]
    duals: Optional[np.ndarray]  # one per row, max convention
    iterations: int


@dataclass
class CertificateReport:
    """Residuals of an optimal solution against its own problem data."""

    max_row_residual: float
    max_bound_violation: float
    duality_gap: float
    ok: bool


_NB_LOWER, _NB_UPPER, _BASIC = 0, 1, 2


class _Simplex:
    def __init__(self, lp: LinearProgram, max_iterations: Optional[int]):
        self.lp = lp
        m, n = lp.num_rows, lp.num_vars
        self.m, self.n = m, n

        # standard form: one slack per inequality row, then artificials as needed
        ineq_rows = [i for i, s in enumerate(lp.senses) if s != "="]
        slack_sign = np.array([1.0 if lp.senses[i] == "<=" else -1.0 for i in ineq_rows])
        n_slack = len(ineq_rows)
        cols = np.zeros((m, n + n_slack))
        cols[:, :n] = lp.A
        cols[ineq_rows, n + np.arange(n_slack)] = slack_sign
        lo = np.concatenate([lp.lb, np.zeros(n_slack)])
        up = np.concatenate([lp.ub, np.full(n_slack, np.inf)])

        # nonbasic start: every structural at a finite bound, slacks at 0
        start_at_upper = ~np.isfinite(lp.lb)
        status = np.full(n + n_slack, _NB_LOWER, dtype=np.int8)
        status[:n][start_at_upper] = _NB_UPPER
        x0 = np.where(start_at_upper, lp.ub, lp.lb)

        resid = lp.b - lp.A @ x0
        basis = np.full(m, -1, dtype=int)
        art_cols = []
        slack_of_row = dict(zip(ineq_rows, n + np.arange(n_slack)))
        slack_val = np.zeros(m)
        for k, i in enumerate(ineq_rows):
            slack_val[i] = slack_sign[k] * resid[i]
        xB = np.zeros(m)
        for i in range(m):
            j = slack_of_row.get(i)
            if j is not None and slack_val[i] >= 0.0:
                basis[i] = j
                status[j] = _BASIC
                xB[i] = slack_val[i]
            else:
                tau = 1.0 if resid[i] >= 0 else -1.0
                art_cols.append((i, tau))
                xB[i] = abs(resid[i])

        n_art = len(art_cols)
        full = np.zeros((m, n + n_slack + n_art))
        full[:, : n + n_slack] = cols
        for k, (i, tau) in enumerate(art_cols):
            full[i, n + n_slack + k] = tau
            basis[i] = n + n_slack + k
        self.art_start = n + n_slack
        self.full = full
        self.lo = np.concatenate([lo, np.zeros(n_art)])
        self.up = np.concatenate([up, np.full(n_art, np.inf)])
        self.status = np.concatenate([status, np.full(n_art, _BASIC, dtype=np.int8)])
        self.basis = basis
        self.xB = xB
        self.ntot = full.shape[1]

        # tableau starts as B^-1 * full with B the (slack|artificial) start
        # basis; that B is diagonal +-1, so invert by row scaling
        scale = np.ones(m)
        for i in range(m):
            scale[i] = full[i, basis[i]]
        self.tab = full / scale[:, None] if m else full.copy()

        self.iterations = 0
        if max_iterations is None:
            max_iterations = 50 * (m + self.ntot) + 1000
        self.max_iterations = max_iterations
        self.bland = False
        self.stall = 0
        self.stall_limit = 3 * (m + self.ntot)
        self.enterable = np.ones(self.ntot, dtype=bool)
        self.enterable[self.up - self.lo <= 0] = False

    # -- helpers -------------------------------------------------------------

    def _reduced_costs(self, cost: np.ndarray) -> np.ndarray:
        if self.m == 0:
            return cost.copy()
        return cost - cost[self.basis] @ self.tab

    def _objective(self, cost: np.ndarray) -> float:
        x = self._full_solution()
        return float(cost @ x)

    def _full_solution(self) -> np.ndarray:
        x = np.where(self.status == _NB_UPPER, self.up, self.lo)
        x[self.status == _BASIC] = 0.0
        if self.m:
            x[self.basis] = self.xB
        return x

    # -- core loop -----------------------------------------------------------

    def _iterate(self, cost: np.ndarray, phase: int) -> str:
        d = self._reduced_costs(cost)
        best_obj = -np.inf
        pivots = 0
        while True:
            if pivots and pivots % 128 == 0:
                d = self._reduced_costs(cost)  # shed incremental-update drift
            viol = np.where(
                self.status == _NB_LOWER, d, np.where(self.status == _NB_UPPER, -d, 0.0)
            )
            viol[~self.enterable] = 0.0
            if phase == 2:
                viol[self.art_start :] = 0.0
            candidates = viol > OPTIMALITY_TOL
            if not candidates.any():
                return "optimal"
            if self.bland:
                j = int(np.argmax(candidates))  # smallest improving index
            else:
                j = int(np.argmax(viol))
            if self.iterations >= self.max_iterations:
                raise LpNumericalError(
                    f"no convergence after {self.iterations} simplex iterations"
                )
            self.iterations += 1

            direction = 1.0 if self.status[j] == _NB_LOWER else -1.0
            col = self.tab[:, j] if self.m else np.zeros(0)
            delta = -direction * col  # per-unit motion of each basic variable

            theta_enter = self.up[j] - self.lo[j]
            lbB = self.lo[self.basis] if self.m else np.zeros(0)
            ubB = self.up[self.basis] if self.m else np.zeros(0)
            with np.errstate(divide="ignore", invalid="ignore"):
                gap_up = np.maximum(ubB - self.xB, 0.0)
                gap_dn = np.maximum(self.xB - lbB, 0.0)
                theta_rows = np.where(
                    delta > PIVOT_TOL,
                    gap_up / delta,
                    np.where(delta < -PIVOT_TOL, gap_dn / (-delta), np.inf),
                )
            theta_row = float(theta_rows.min()) if self.m else np.inf
            theta = min(theta_enter, theta_row)
            if not np.isfinite(theta):
                return "unbounded"

            if theta_enter <= theta_row:
                # bound flip: j runs all the way to its other bound
                if self.m:
                    self.xB -= direction * theta_enter * col
                self.status[j] = _NB_UPPER if self.status[j] == _NB_LOWER else _NB_LOWER
            else:
                ties = np.flatnonzero(theta_rows <= theta + 1e-12)
                if self.bland:
                    r = int(ties[np.argmin(self.basis[ties])])
                else:
                    r = int(ties[np.argmax(np.abs(delta[ties]))])
                leaving = self.basis[r]
                self.xB -= direction * theta * col
                enter_val = (
                    self.lo[j] + theta if self.status[j] == _NB_LOWER else self.up[j] - theta
                )
                self.status[leaving] = _NB_UPPER if delta[r] > 0 else _NB_LOWER
                self._pivot(r, j)
                d -= d[j] * self.tab[r]
                d[j] = 0.0
                self.xB[r] = enter_val
                self.status[j] = _BASIC
                pivots += 1

            obj = self._objective(cost)
            if obj > best_obj + 1e-9 * (1.0 + abs(best_obj)):
                best_obj = obj
                self.stall = 0
            else:
                self.stall += 1
                if self.stall > self.stall_limit and not self.bland:
                    logger.debug("stalled %d iterations; switching to Bland", self.stall)
                    self.bland = True

    def _pivot(self, r: int, j: int) -> None:
        piv = self.tab[r, j]
        if abs(piv) < PIVOT_TOL:
            raise LpNumericalError(f"pivot {piv:g} below tolerance at row {r}")
        self.tab[r] /= piv
        col = self.tab[:, j].copy()
        col[r] = 0.0
        self.tab -= np.outer(col, self.tab[r])
        self.tab[:, j] = 0.0
        self.tab[r, j] = 1.0
        self.basis[r] = j

    def _purge_artificials(self) -> None:
        for r in range(self.m):
            j = self.basis[r]
            if j < self.art_start:
                continue
            row = np.abs(self.tab[r, : self.art_start])
            row[self.status[: self.art_start] == _BASIC] = 0.0
            cand = int(np.argmax(row))
            if row[cand] > max(PIVOT_TOL, 1e-10):
                val = self.up[cand] if self.status[cand] == _NB_UPPER else self.lo[cand]
                self.status[j] = _NB_LOWER
                self._pivot(r, cand)
                self.status[cand] = _BASIC
                self.xB[r] = val
            # else: redundant row, the artificial stays basic at ~0
        # whatever happened, no artificial may ever move again
        self.enterable[self.art_start :] = False
        self.lo[self.art_start :] = 0.0
        self.up[self.art_start :] = 0.0

    def run(self) -> LpSolution:
        b_scale = 1.0 + (np.abs(self.lp.b).max() if self.m else 0.0)
        if self.art_start < self.ntot:
            cost1 = np.zeros(self.ntot)
            cost1[self.art_start :] = -1.0
            outcome = self._iterate(cost1, phase=1)
            infeas = -self._objective(cost1)
            if outcome != "optimal" or infeas > FEASIBILITY_TOL * b_scale:
                return LpSolution("infeasible", None, None, None, self.iterations)
            self._purge_artificials()
            self.bland = False
            self.stall = 0

        cost2 = np.zeros(self.ntot)
        cost2[: self.n] = self.lp.c
        outcome = self._iterate(cost2, phase=2)
        if outcome == "unbounded":
            return LpSolution("unbounded", None, None, None, self.iterations)
        return self._extract(cost2)

    def _extract(self, cost2: np.ndarray) -> LpSolution:
        # recompute the final point from original data instead of trusting
        # the accumulated tableau: solve B xB = b - N xN, then clip into
        # bounds (clips the 1e-12 dust that pivoting leaves behind)
        x = self._full_solution()
        if self.m:
            B = self.full[:, self.basis]
            x_nb = x.copy()
            x_nb[self.basis] = 0.0
            rhs = self.lp.b - self.full @ x_nb
            try:
                xB = np.linalg.solve(B, rhs)
                y = np.linalg.solve(B.T, cost2[self.basis])
            except np.linalg.LinAlgError:
                xB = self.xB  # keep tableau values; still within tolerances
                y, *_ = np.linalg.lstsq(B.T, cost2[self.basis], rcond=None)
            xB = np.clip(xB, self.lo[self.basis], self.up[self.basis])
            x[self.basis] = xB
        else:
            y = np.zeros(0)
        x_struct = x[: self.n]
        objective = float(self.lp.c @ x_struct)
        return LpSolution("optimal", x_struct, objective, y, self.iterations)


def solve(lp: LinearProgram, max_iterations: Optional[int] = None) -> LpSolution:
    """Solve ``lp`` to proven optimality, infeasibility or unboundedness."""
    return _Simplex(lp, max_iterations).run()


def check_solution(lp: LinearProgram, sol: LpSolution) -> CertificateReport:
    """Residual report for an optimal solution; raises on other statuses.

    The duality gap is evaluated with reduced costs ``d = c - A' y``:
    ``dual = y @ b + sum(d_j * u_j if d_j > 0 else d_j * l_j)``. Reduced
    costs smaller than ``1e-9 * (1 + |c_j|)`` are treated as zero so that
    rounding dust on variables with an infinite bound cannot blow the
    gap up to infinity.
    """
    if sol.status != "optimal":
        raise LpError(f"no certificate to check: solution status is {sol.status!r}")
    x, y = sol.x, sol.duals
    row_vals = lp.A @ x
    resid = np.zeros(lp.num_rows)
    for i, s in enumerate(lp.senses):
        if s == "<=":
            resid[i] = max(0.0, row_vals[i] - lp.b[i])
        elif s == ">=":
            resid[i] = max(0.0, lp.b[i] - row_vals[i])
        else:
            resid[i] = abs(row_vals[i] - lp.b[i])
    bound_viol = np.maximum(lp.lb - x, x - lp.ub)
    bound_viol = float(np.max(np.maximum(bound_viol, 0.0))) if lp.num_vars else 0.0

    d = lp.c - (y @ lp.A if lp.num_rows else np.zeros(lp.num_vars))
    d = np.where(np.abs(d) <= 1e-9 * (1.0 + np.abs(lp.c)), 0.0, d)
    active_bound = np.where(d > 0, lp.ub, lp.lb)
    bound_term = np.where(d == 0, 0.0, d * np.where(d == 0, 0.0, active_bound))
    dual_obj = float((y @ lp.b if lp.num_rows else 0.0) + bound_term.sum())
    gap = abs(dual_obj - sol.objective)

    ok = (
        bool(np.all(resid <= 1e-7 * (1.0 + np.abs(lp.b)))) if lp.num_rows else True
    )
    ok = ok and bound_viol <= 1e-9
    ok = ok and gap <= 1e-6 * (1.0 + abs(sol.objective))
    return CertificateReport(
        max_row_residual=float(resid.max()) if lp.num_rows else 0.0,
        max_bound_violation=bound_viol,
        duality_gap=gap,
        ok=ok,
    )


def dump(lp: LinearProgram) -> str:
    """Human-readable rendering of a program, for debugging reports."""

    def terms(coeffs) -> str:
        parts = [f"{v:+g} x{j}" for j, v in enumerate(coeffs) if v != 0.0]
        return " ".join(parts) if parts else "0"

    lines = [f"maximize {terms(lp.c)}", "subject to"]
    for i in range(lp.num_rows):
        lines.append(f"  r{i}: {terms(lp.A[i])} {lp.senses[i]} {lp.b[i]:g}")
    lines.append("bounds")
    for j in range(lp.num_vars):
        lines.append(f"  {lp.lb[j]:g} <= x{j} <= {lp.ub[j]:g}")
    return "\n".join(lines)
