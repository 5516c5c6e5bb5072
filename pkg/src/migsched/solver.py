"""Energy-minimal bandwidth schedules over a rate partition.

The reduced problem optimises the q + 2 decision rates.  Every energy and
time term is a posynomial of the rates, so after the substitution x = ln R
the objective ln E and the log-form time constraints are convex and the
speed-up/cap constraints become a box on x.  The solver runs a spectral
projected-gradient descent on an augmented-Lagrangian form until the KKT
and feasibility residuals stall below tolerance.

``brute_force_oracle`` is an independent check: it scans a log-spaced tensor
grid of the same reduced variables and returns the feasible minimum.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .model import (
    FEAS_TOL,
    InfeasibleProblemError,
    StageConstants,
    constraint_residuals,
    min_feasible_rounds,
    simulate,
)
from .partition import build_partition, expand

# Log-space feasibility target driven by the multiplier loop; comfortably
# tighter than the FEAS_TOL used to classify the returned schedule.
_AL_FEAS = 1e-10
_OUTER_MAX = 40


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 5000   # total inner-iteration budget
    tolerance: float = 1e-7     # relative KKT / energy-stall threshold
    step_init: float = 1.0       # initial step in log-rate space
    round_cap: int = 29          # outer-search upper bound on i_max
    floor_frac: float = 1e-4     # positivity floor as a fraction of the rate cap

    def __post_init__(self):
        for name in ("max_iterations", "tolerance", "step_init", "floor_frac"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if self.round_cap < 0:
            raise ValueError("round_cap must be >= 0")


@dataclass(frozen=True)
class SolverReport:
    partition: object
    schedule: object
    outcome: object
    feasible: bool
    iterations: int
    max_residual: float
    status: str                      # converged | infeasible | iteration-limit
    multipliers: tuple = ()          # AL duals at exit (downtime, total-time)
    penalty: float = 0.0             # final AL penalty coefficient
    log_rates: tuple = ()            # reduced log-rates at exit
    hint_min_rounds: object = None   # filled on infeasible reports

    @property
    def energy(self):
        return self.outcome.e_tot


class ReducedProblem:
    """Objective/constraints of the partitioned problem in log-rate space."""

    def __init__(self, scenario, workload, qos, stages, partition, floor_frac=1e-4):
        self.scenario = scenario
        self.workload = workload
        self.qos = qos
        self.stages = stages
        self.partition = partition
        self.rounds = partition.segment_rounds
        self.d = partition.n_reduced
        self.fixed_dt = stages.downtime_overhead
        self.fixed_tm = stages.total_overhead

        floor = scenario.r_hat * floor_frac
        lo = np.full(self.d, floor)
        if qos.theta:
            lo[:-1] = np.maximum(lo[:-1], qos.beta * workload.dirty_rate)
        hi = np.full(self.d, scenario.r_hat)
        self.box_empty = bool(np.any(lo > hi * (1.0 + 1e-12)))
        self.lb = np.log(np.minimum(lo, hi))
        self.ub = np.log(hi)
        # Box with unsatisfiable speed-up floors dropped back to the positivity
        # floor; the tracker projects onto this so an infeasible episode keeps
        # honest dynamics instead of pinning every rate at the cap.
        self.lb_relaxed = np.where(lo > hi, np.log(floor), self.lb)

    # -- evaluation ---------------------------------------------------------

    def raw(self, x):
        """(e_dyn, t_pre, t_sc) at reduced log-rates x."""
        y = np.exp(x)
        return _kernels.seg_eval(
            y, self.rounds, self.workload.m0, self.workload.dirty_rate,
            self.scenario.power.k0, self.scenario.power.alpha,
        )

    def psi(self, x):
        """Time-constraint residuals (downtime, total time) at x."""
        e, tp, ts = self.raw(x)
        psi = [(ts + self.fixed_dt) / self.qos.delta_dt - 1.0]
        if self.qos.theta:
            psi.append((tp + ts + self.fixed_tm) / self.qos.delta_tm - 1.0)
        return np.asarray(psi)

    def eval(self, x):
        """ln-energy objective, log-form constraints, and their gradients."""
        y = np.exp(x)
        e, tp, ts, ge, gtp, gts = _kernels.seg_eval_grad(
            y, self.rounds, self.workload.m0, self.workload.dirty_rate,
            self.scenario.power.k0, self.scenario.power.alpha,
        )
        e_tot = self.scenario.e_setup + e
        fval = np.log(e_tot)
        fgrad = ge / e_tot

        t_dt = ts + self.fixed_dt
        cons = [_log_con(t_dt, self.qos.delta_dt, gts)]
        if self.qos.theta:
            t_tm = tp + ts + self.fixed_tm
            cons.append(_log_con(t_tm, self.qos.delta_tm, gtp + gts))
        gvals = np.array([c[0] for c in cons])
        ggrads = np.array([c[1] for c in cons])
        return fval, fgrad, gvals, ggrads

    def al_value_grad(self, x, lam, rho):
        """Augmented Lagrangian (Rockafellar inequality form) and gradient."""
        fval, fgrad, g, gg = self.eval(x)
        val = fval
        grad = fgrad.copy()
        for k in range(len(g)):
            t = lam[k] + rho * g[k]
            if t > 0.0:
                val += (t * t - lam[k] ** 2) / (2.0 * rho)
                grad += t * gg[k]
            else:
                val -= lam[k] ** 2 / (2.0 * rho)
        return val, grad

    def schedule_at(self, x):
        return expand(self.partition, np.exp(x))

    def report(self, x, *, status, iterations, lam=(), rho=0.0, hint=None):
        schedule = self.schedule_at(x)
        outcome = simulate(schedule, self.workload, self.scenario, self.stages)
        residuals = constraint_residuals(
            outcome, schedule, self.qos, self.scenario, self.partition.updated_indices
        )
        return SolverReport(
            partition=self.partition,
            schedule=schedule,
            outcome=outcome,
            feasible=residuals.feasible(),
            iterations=iterations,
            max_residual=residuals.worst,
            status=status,
            multipliers=tuple(lam),
            penalty=rho,
            log_rates=tuple(x),
            hint_min_rounds=hint,
        )


def _log_con(t, delta, grad_t):
    if t <= 0.0:
        return -745.0, np.zeros_like(grad_t)  # vacuously satisfied (w = 0 cases)
    return np.log(t / delta), grad_t / t


def _spg(value_grad, x, lb, ub, tol, max_iter, step_init):
    """Spectral projected gradient with nonmonotone Armijo line search."""
    x = np.clip(x, lb, ub)
    f, g = value_grad(x)
    step = step_init
    hist = [f]
    it = 0
    while it < max_iter:
        pg = x - np.clip(x - g, lb, ub)
        if np.max(np.abs(pg)) <= tol:
            break
        it += 1
        d = np.clip(x - step * g, lb, ub) - x
        gd = float(g @ d)
        if gd >= 0.0:
            d = -pg
            gd = float(g @ d)
            if gd >= 0.0:
                break
        t = 1.0
        fref = max(hist[-10:])
        while True:
            xn = x + t * d
            fn, gn = value_grad(xn)
            if fn <= fref + 1e-4 * t * gd or t <= 1e-16:
                break
            t *= 0.5
        s = xn - x
        yv = gn - g
        sy = float(s @ yv)
        if sy > 1e-16:
            step = min(max(float(s @ s) / sy, 1e-12), 1e12)
        else:
            step = min(step * 2.0, 1e12)
        x, f, g = xn, fn, gn
        hist.append(f)
    pg = x - np.clip(x - g, lb, ub)
    return x, it, float(np.max(np.abs(pg)))


def _fd_hessian(value_grad, x, free):
    """Central-difference Hessian of the gradient, restricted to free coords."""
    idx = np.flatnonzero(free)
    h = np.empty((len(idx), len(idx)))
    for col, j in enumerate(idx):
        e = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xp[j] += e
        xm = x.copy()
        xm[j] -= e
        gp = value_grad(xp)[1]
        gm = value_grad(xm)[1]
        h[:, col] = (gp[idx] - gm[idx]) / (2.0 * e)
    return 0.5 * (h + h.T)


def _pnewton(value_grad, x, lb, ub, tol, max_iter):
    """Projected Newton endgame; handles the nearly flat log-rate directions.

    Coordinates pinned at a bound with an outward-pointing gradient are frozen;
    the Newton step on the rest is ridge-regularised until it is a descent
    direction, then backtracked and clipped into the box.
    """
    x = np.clip(x, lb, ub)
    f, g = value_grad(x)
    it = 0
    while it < max_iter:
        pg = x - np.clip(x - g, lb, ub)
        if np.max(np.abs(pg)) <= tol:
            break
        it += 1
        active = ((x - lb <= 1e-10) & (g > 0)) | ((ub - x <= 1e-10) & (g < 0))
        free = ~active
        if not free.any():
            break
        hess = _fd_hessian(value_grad, x, free)
        gf = g[free]
        ridge = 0.0
        scale = max(np.max(np.abs(np.diag(hess))), 1e-12)
        d = np.zeros_like(x)
        while True:
            try:
                step = np.linalg.solve(hess + ridge * np.eye(len(gf)), -gf)
            except np.linalg.LinAlgError:
                step = -gf
            if float(step @ gf) < 0.0:
                break
            ridge = max(2.0 * ridge, 1e-10 * scale)
            if ridge > 1e12 * scale:
                step = -gf
                break
        d[free] = step
        gd = float(g @ d)
        t = 1.0
        improved = False
        while t > 1e-16:
            xn = np.clip(x + t * d, lb, ub)
            fn, gn = value_grad(xn)
            if fn <= f + 1e-4 * min(gd, 0.0) * t or fn < f:
                improved = True
                break
            t *= 0.5
        if not improved:
            break
        x, f, g = xn, fn, gn
    pg = x - np.clip(x - g, lb, ub)
    return x, it, float(np.max(np.abs(pg)))


def _inner_min(value_grad, x, lb, ub, tol, max_iter, step_init):
    """SPG to rough accuracy, then projected Newton down to ``tol``."""
    coarse = max(tol, 1e-5)
    x, it1, pg = _spg(value_grad, x, lb, ub, coarse, min(150, max_iter), step_init)
    if pg <= tol:
        return x, it1, pg
    x, it2, pg = _pnewton(value_grad, x, lb, ub, tol, min(60, max(max_iter - it1, 0)))
    return x, it1 + it2, pg


def _initial_point(prob):
    qos, wl, sc = prob.qos, prob.workload, prob.scenario
    base = qos.beta * wl.dirty_rate if qos.theta else wl.dirty_rate
    base = max(base, sc.r_hat * 1e-4)
    x0 = np.full(prob.d, np.log(min(sc.r_hat, np.sqrt(base * sc.r_hat))))
    return np.clip(x0, prob.lb, prob.ub)


def _solve_zero_dirty(prob, opts):
    """With a zero dirty rate only round 0 carries volume; pick R_0 directly."""
    sc, qos, stages = prob.scenario, prob.qos, prob.stages
    floor = sc.r_hat * opts.floor_frac
    hint = min_feasible_rounds(prob.workload, sc, qos, stages)
    if stages.downtime_overhead > qos.delta_dt * (1.0 + FEAS_TOL):
        return prob.report(prob.ub, status="infeasible", iterations=0, hint=hint)
    r0_min = floor
    if qos.theta:
        budget = qos.delta_tm - stages.total_overhead
        if budget <= 0 or prob.workload.m0 / budget > sc.r_hat * (1.0 + FEAS_TOL):
            return prob.report(prob.ub, status="infeasible", iterations=0, hint=hint)
        r0_min = max(r0_min, prob.workload.m0 / budget)
    alpha = sc.power.alpha
    r0 = min(r0_min, sc.r_hat) if alpha > 1 else sc.r_hat
    x = prob.ub.copy()
    x[0] = np.log(r0)
    return prob.report(x, status="converged", iterations=0)


def solve_tcbm(scenario, workload, qos, stages=StageConstants(), partition=None, opts=None):
    """Minimise migration energy over the partition's decision rates.

    Returns a SolverReport; infeasibility and iteration-limit outcomes are
    reported in ``status`` rather than raised.
    """
    opts = opts or SolverOptions()
    if partition is None:
        raise ValueError("partition is required")
    prob = ReducedProblem(scenario, workload, qos, stages, partition, opts.floor_frac)

    hint = None
    if prob.box_empty:
        hint = min_feasible_rounds(workload, scenario, qos, stages)
        return prob.report(prob.ub, status="infeasible", iterations=0, hint=hint)
    if workload.dirty_rate == 0.0:
        return _solve_zero_dirty(prob, opts)
    # The all-at-cap point minimises both times, so it decides feasibility.
    if np.max(prob.psi(prob.ub)) > FEAS_TOL:
        hint = min_feasible_rounds(workload, scenario, qos, stages)
        return prob.report(prob.ub, status="infeasible", iterations=0, hint=hint)

    # Multiplier loop with the classic two-track schedule: tighten the inner
    # optimality target omega and the feasibility target eta while multiplier
    # steps make progress; raise the penalty only when they do not.
    x = _initial_point(prob)
    m = 2 if qos.theta else 1
    lam = np.zeros(m)
    rho = 10.0
    omega = 1.0 / rho
    eta = rho ** -0.1
    omega_min = min(1e-9, opts.tolerance * 1e-2)
    budget = opts.max_iterations
    total = 0
    e_prev = None
    status = "iteration-limit"
    for _ in range(_OUTER_MAX):
        x, it, pg = _inner_min(
            lambda z: prob.al_value_grad(z, lam, rho),
            x, prob.lb, prob.ub, max(omega, omega_min), budget - total, opts.step_init,
        )
        total += it
        _, _, g, _ = prob.eval(x)
        viol = float(np.max(np.maximum(g, -lam / rho)))
        e_now = prob.raw(x)[0]
        stalled = e_prev is not None and abs(e_now - e_prev) <= opts.tolerance * max(e_now, 1e-300)
        e_prev = e_now
        if viol <= _AL_FEAS and pg <= 10.0 * omega_min and stalled:
            # report the multipliers the final inner solve was run against,
            # so the iterate is stationary for the reported augmented problem
            status = "converged"
            break
        if total >= budget:
            break
        if viol <= max(eta, _AL_FEAS):
            lam = np.maximum(0.0, lam + rho * g)
            omega = max(omega / rho, omega_min)
            eta = max(eta / rho ** 0.9, _AL_FEAS * 0.1)
        else:
            rho = min(rho * 10.0, 1e8)
            omega = max(1.0 / rho, omega_min)
            eta = rho ** -0.1
    return prob.report(x, status=status, iterations=total, lam=lam, rho=rho, hint=hint)


def _as_q_rule(q_rule):
    if callable(q_rule):
        return q_rule
    if q_rule == "full":
        return lambda i: i
    q = int(q_rule)
    return lambda i: 0 if i == 0 else min(q, i)


def optimize_rounds(scenario, workload, qos, stages=StageConstants(), q_rule=1, opts=None):
    """Search the round count for the minimum-energy feasible schedule.

    Evaluates every i_max from the feasibility minimum up to the round cap and
    returns ``(best_i_max, report)``; ties go to the smallest i_max.
    """
    opts = opts or SolverOptions()
    q_of = _as_q_rule(q_rule)
    i_lo = min_feasible_rounds(workload, scenario, qos, stages, round_cap=opts.round_cap)
    if i_lo is None:
        raise InfeasibleProblemError(
            "no feasible round count up to the cap "
            f"(beta*w = {qos.beta * workload.dirty_rate:g} vs cap {scenario.r_hat:g})"
        )
    best = None
    for i in range(i_lo, opts.round_cap + 1):
        rep = solve_tcbm(scenario, workload, qos, stages, build_partition(i, q_of(i)), opts)
        if rep.status != "converged":
            continue
        if best is None or rep.energy < best[1].energy:
            best = (i, rep)
    if best is None:
        raise InfeasibleProblemError("no candidate round count converged")
    return best


def brute_force_oracle(scenario, workload, qos, stages=StageConstants(), partition=None,
                       grid_points=200, floor_frac=1e-4):
    """Exhaustive log-spaced grid search over the reduced rates.

    Independent of the descent solver; used to cross-check its optima.
    Returns ``(schedule, energy)`` of the best feasible grid point.
    """
    if partition is None:
        raise ValueError("partition is required")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    prob = ReducedProblem(scenario, workload, qos, stages, partition, floor_frac)
    if prob.box_empty:
        raise InfeasibleProblemError("empty rate box: beta*w exceeds the rate cap")

    d = prob.d
    w = workload.dirty_rate
    k0 = scenario.power.k0
    alpha = scenario.power.alpha
    grids = [np.geomspace(np.exp(prob.lb[l]), np.exp(prob.ub[l]), grid_points) for l in range(d)]
    vm = np.empty((d, grid_points))
    te = np.empty((d, grid_points))
    en = np.empty((d, grid_points))
    for l in range(d):
        rho = w / grids[l]
        n = int(prob.rounds[l])
        h = np.ones(grid_points)
        p = np.ones(grid_points)
        for _ in range(1, n):
            p *= rho
            h += p
        vm[l] = p * rho
        te[l] = h / grids[l]
        en[l] = k0 * grids[l] ** (alpha - 1.0) * h

    delta_tm = qos.delta_tm * (1.0 + FEAS_TOL) if qos.theta else np.inf
    flat, e_dyn = _kernels.grid_min(
        vm, te, en, workload.m0,
        prob.fixed_dt, prob.fixed_tm,
        qos.delta_dt * (1.0 + FEAS_TOL), delta_tm,
    )
    if flat < 0:
        raise InfeasibleProblemError("no feasible grid point")
    idx = np.unravel_index(flat, (grid_points,) * d)
    schedule = expand(partition, [grids[l][idx[l]] for l in range(d)])
    return schedule, scenario.e_setup + e_dyn
