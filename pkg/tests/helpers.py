"""Hand-built plants, curves, traces, and brute-force oracles for the tests."""

import itertools

import numpy as np

from dcems import (
    PlantConfig,
    ProcessingCurve,
    RenewableTrace,
    RetailTariff,
    TimeGrid,
    TraceSet,
    WholesaleTariff,
    WorkloadTrace,
)


def identity_curve(cap_kw=60.0):
    return ProcessingCurve.from_breakpoints([(0.0, 0.0), (cap_kw, cap_kw)])


def two_segment_curve():
    # F(p) = 2p on [0, 50), p + 50 on [50, 100]
    return ProcessingCurve.from_breakpoints([(0.0, 0.0), (50.0, 100.0), (100.0, 150.0)])


def random_curve(rng, max_power=100.0):
    k = int(rng.integers(1, 5))
    cuts = np.sort(rng.uniform(0.1, 1.0, k - 1)) * max_power if k > 1 else np.array([])
    powers = np.concatenate([[0.0], cuts, [max_power]])
    slopes = np.sort(rng.uniform(0.2, 3.0, k))[::-1]
    slopes += np.linspace(0.05 * k, 0.0, k)  # keep strictly decreasing
    points = [(0.0, 0.0)]
    w = 0.0
    for i in range(k):
        w += slopes[i] * (powers[i + 1] - powers[i])
        points.append((float(powers[i + 1]), float(w)))
    return ProcessingCurve.from_breakpoints(points)


def small_plant(**overrides):
    base = dict(
        dc_capacity_kw=60.0,
        renewable_capacity_kw=80.0,
        import_max_kw=100.0,
        export_max_kw=100.0,
    )
    base.update(overrides)
    return PlantConfig(**base)


def grid_of(total, horizon=None, dt=1.0):
    return TimeGrid(
        interval_hours=dt,
        horizon_intervals=total if horizon is None else horizon,
        total_intervals=total,
    )


def traces_of(eta, rigid, flex, lmp=None, imp=None, exp=None):
    def arr(v):
        return None if v is None else np.asarray(v, dtype=float)

    return TraceSet(
        renewable=RenewableTrace(np.asarray(eta, dtype=float)),
        workload=WorkloadTrace(np.asarray(rigid, dtype=float), np.asarray(flex, dtype=float)),
        lmp_usd_per_kwh=arr(lmp),
        import_rate_usd_per_kwh=arr(imp),
        export_rate_usd_per_kwh=arr(exp),
    )


def wholesale(prices):
    return WholesaleTariff(np.asarray(prices, dtype=float))


def retail(imp, exp, demand_charge=0.0):
    return RetailTariff(
        np.asarray(imp, dtype=float), np.asarray(exp, dtype=float), demand_charge
    )


def enumerate_vertices(lp, feas_tol=1e-7):
    """Brute-force LP oracle: best objective over all basic feasible points.

    Every vertex of {Ax (sense) b, l <= x <= u} with finite bounds makes
    n constraints active: some rows tight plus some variables at a bound.
    Enumerate row subsets and bound patterns, solve the square system for
    the free variables, keep feasible points. Returns (status, objective).
    """
    c, A, b = lp.c, lp.A, lp.b
    lb, ub = lp.lb, lp.ub
    n, m = len(c), len(b)
    eq = [i for i in range(m) if lp.senses[i] == "="]
    ineq = [i for i in range(m) if lp.senses[i] != "="]
    le = np.array([s == "<=" for s in lp.senses])
    ge = np.array([s == ">=" for s in lp.senses])
    eq_mask = np.array([s == "=" for s in lp.senses])

    def feasible(points):
        ok = np.all(points >= lb - feas_tol, axis=1)
        ok &= np.all(points <= ub + feas_tol, axis=1)
        if m:
            r = points @ A.T - b
            if le.any():
                ok &= np.all(r[:, le] <= feas_tol, axis=1)
            if ge.any():
                ok &= np.all(r[:, ge] >= -feas_tol, axis=1)
            if eq_mask.any():
                ok &= np.all(np.abs(r[:, eq_mask]) <= feas_tol, axis=1)
        return ok

    best = None
    for extra in range(0, n - len(eq) + 1):
        k = len(eq) + extra
        for rows_extra in itertools.combinations(ineq, extra):
            rows = eq + list(rows_extra)
            for free in itertools.combinations(range(n), k):
                fixed = [j for j in range(n) if j not in free]
                patterns = (
                    np.array(list(itertools.product((0, 1), repeat=len(fixed))))
                    if fixed
                    else np.zeros((1, 0), dtype=int)
                )
                pts = np.empty((len(patterns), n))
                if fixed:
                    vals = np.where(patterns == 1, ub[fixed], lb[fixed])
                    if not np.all(np.isfinite(vals)):
                        keep = np.all(np.isfinite(vals), axis=1)
                        patterns, vals = patterns[keep], vals[keep]
                        if not len(patterns):
                            continue
                        pts = np.empty((len(patterns), n))
                    pts[:, fixed] = vals
                if k:
                    M = A[np.ix_(rows, list(free))]
                    if abs(np.linalg.det(M)) < 1e-10:
                        continue
                    rhs = b[rows][None, :] - (
                        pts[:, fixed] @ A[np.ix_(rows, fixed)].T if fixed else 0.0
                    )
                    pts[:, list(free)] = np.linalg.solve(M, rhs.T).T
                good = feasible(pts)
                if good.any():
                    cand = float(np.max(pts[good] @ c))
                    best = cand if best is None else max(best, cand)
    if best is None:
        return "infeasible", None
    return "optimal", best


def brute_force_horizon(
    cap,
    rigid,
    wdf,
    eta_qr,
    im_max,
    ex_max,
    market,
    lmp=None,
    import_rate=None,
    export_rate=None,
    demand_charge=0.0,
    step=1.0,
):
    """Minimum dispatch cost over identity-curve power grids (dt = 1 h).

    Enumerates every per-interval power choice at ``step`` kW. For each
    power vector the grid exchange is resolved in closed form: renewable
    usage g = P^D + E - I lies in [max(0, P^D - im_max), min(eta_qr,
    P^D + ex_max)], and with retail export rate <= import rate the cost
    is monotone in g, so the optimum sits at an endpoint. Returns the
    minimum cost in USD, or None when no grid point is feasible.
    """
    rigid = np.asarray(rigid, float)
    eta_qr = np.asarray(eta_qr, float)
    T = len(rigid)
    axis = np.arange(0.0, cap + step / 2, step)
    pd = np.stack(np.meshgrid(*([axis] * T), indexing="ij"), -1).reshape(-1, T)

    feas = np.all(pd >= rigid - 1e-9, axis=1)
    feas &= (pd - rigid).sum(axis=1) >= wdf - 1e-9
    g_hi = np.minimum(eta_qr, pd + ex_max)
    g_lo = np.maximum(0.0, pd - im_max)
    feas &= np.all(g_lo <= g_hi + 1e-12, axis=1)
    if not feas.any():
        return None
    pd, g_hi, g_lo = pd[feas], g_hi[feas], g_lo[feas]

    if market == "wholesale":
        lmp = np.asarray(lmp, float)
        g = np.where(lmp >= 0.0, g_hi, g_lo)
        cost = ((pd - g) * lmp).sum(axis=1)
    else:
        imp = np.asarray(import_rate, float)
        exp = np.asarray(export_rate, float)
        im = np.maximum(pd - g_hi, 0.0)
        ex = np.maximum(g_hi - pd, 0.0)
        cost = (im * imp - ex * exp).sum(axis=1) + demand_charge * im.max(axis=1)
    return float(cost.min())


def random_box_lp(rng):
    """Random bounded LP with mixed senses, at most 2 equality rows."""
    from dcems import LinearProgram

    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 7))
    c = rng.uniform(-5, 5, n)
    A = rng.uniform(-5, 5, (m, n))
    lb = rng.uniform(-3, 0, n)
    ub = lb + rng.uniform(0.5, 6, n)
    senses = []
    n_eq = 0
    for _ in range(m):
        r = rng.random()
        if r < 0.15 and n_eq < min(2, n - 1):
            senses.append("=")
            n_eq += 1
        elif r < 0.6:
            senses.append("<=")
        else:
            senses.append(">=")
    # anchor rhs near an interior point so a fair share of instances are feasible
    x0 = lb + (ub - lb) * rng.uniform(0.2, 0.8, n)
    slack = rng.uniform(-1, 3, m)
    b = A @ x0 + np.where(np.array(senses) == ">=", -slack, slack)
    b[np.array(senses) == "="] = (A @ x0)[np.array(senses) == "="]
    return LinearProgram(c=c, A=A, senses=senses, b=b, lb=lb, ub=ub)
