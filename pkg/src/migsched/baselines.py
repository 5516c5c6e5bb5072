"""Benchmark bandwidth managers: the Xen ramp heuristic and constant-rate BMOP.

The Xen hypervisor policy starts the pre-copy at the dirty rate and raises
the bandwidth by a constant increment every round, reaching its configured
maximum at the stop-and-copy round.  BMOP holds a single optimised rate for
the whole migration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .model import (
    FEAS_TOL,
    InfeasibleProblemError,
    RateSchedule,
    StageConstants,
    constraint_residuals,
    min_feasible_rounds,
    simulate,
)
from .partition import build_partition
from .solver import SolverOptions, SolverReport

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class XenPolicy:
    """Xen rate-ramp parameters: maximum bandwidth and allowed pre-copy rounds."""

    r_max_xen: float
    i_max_xen: int

    def __post_init__(self):
        if not self.r_max_xen > 0:
            raise ValueError("r_max_xen must be > 0")
        if self.i_max_xen < 0:
            raise ValueError("i_max_xen must be >= 0")

    def delta_r(self, dirty_rate):
        return (self.r_max_xen - dirty_rate) / (self.i_max_xen + 1)


@dataclass(frozen=True)
class XenOutcome:
    schedule: RateSchedule
    outcome: object
    beta_achieved: float  # geometric-mean per-round volume reduction


def xen_schedule(workload, policy):
    """Rates R_i = w + i * (r_max - w) / (i_max + 1), i = 0 .. i_max + 1."""
    w = workload.dirty_rate
    if policy.r_max_xen <= w:
        raise ValueError("r_max_xen must exceed the dirty rate")
    dr = policy.delta_r(w)
    rates = tuple(w + i * dr for i in range(policy.i_max_xen + 2))
    return RateSchedule(policy.i_max_xen, rates)


def xen_evaluate(workload, scenario, stages=StageConstants(), policy=None):
    """Simulate the Xen schedule and measure its achieved speed-up factor."""
    schedule = xen_schedule(workload, policy)
    outcome = simulate(schedule, workload, scenario, stages)
    v0 = float(outcome.volumes[0])
    v_sc = float(outcome.volumes[-1])
    n = policy.i_max_xen + 1
    beta = math.inf if v_sc == 0.0 else (v0 / v_sc) ** (1.0 / n)
    return XenOutcome(schedule=schedule, outcome=outcome, beta_achieved=beta)


def _golden_min(f, lo, hi, tol=1e-12):
    """Golden-section minimum of a unimodal f on [lo, hi]; returns (x, f(x), nevals)."""
    a, b = lo, hi
    h = b - a
    if h <= tol * max(1.0, abs(lo)):
        return lo, f(lo), 1
    c = b - _INV_PHI * h
    d = a + _INV_PHI * h
    fc, fd = f(c), f(d)
    n = 2
    while h > tol * max(1.0, abs(a)):
        if fc < fd:
            b, d, fd = d, c, fc
            h = b - a
            c = b - _INV_PHI * h
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            h = b - a
            d = a + _INV_PHI * h
            fd = f(d)
        n += 1
    x = c if fc < fd else d
    return x, min(fc, fd), n


def solve_bmop(scenario, workload, qos, stages=StageConstants(), i_max=0, opts=None):
    """Best constant rate held for the whole migration, as a SolverReport.

    One-dimensional minimisation on the log-rate axis over the feasible
    interval; both time constraints are decreasing in the rate, so the
    feasible set is an interval ending at the cap.
    """
    opts = opts or SolverOptions()
    partition = build_partition(i_max, 0 if i_max == 0 else 1)

    def evaluate(rate):
        schedule = RateSchedule.constant(i_max, rate)
        outcome = simulate(schedule, workload, scenario, stages)
        res = constraint_residuals(outcome, schedule, qos, scenario, partition.updated_indices)
        return schedule, outcome, res

    def report(rate, status, nevals):
        schedule, outcome, res = evaluate(rate)
        return SolverReport(
            partition=partition,
            schedule=schedule,
            outcome=outcome,
            feasible=res.feasible(),
            iterations=nevals,
            max_residual=res.worst,
            status=status,
            hint_min_rounds=min_feasible_rounds(workload, scenario, qos, stages)
            if status == "infeasible" else None,
        )

    r_hat = scenario.r_hat
    lo = r_hat * opts.floor_frac
    if qos.theta:
        lo = max(lo, qos.beta * workload.dirty_rate)
    if lo > r_hat * (1.0 + 1e-12):
        return report(r_hat, "infeasible", 0)
    _, _, res_cap = evaluate(r_hat)
    worst_cap = max(res_cap.psi1, res_cap.psi2)
    if worst_cap > FEAS_TOL:
        return report(r_hat, "infeasible", 1)

    def time_violation(rate):
        _, _, res = evaluate(rate)
        return max(res.psi1, res.psi2)

    # Both residuals decrease in the rate: bisect for the feasibility boundary.
    nevals = 1
    if time_violation(lo) > FEAS_TOL:
        a, b = lo, r_hat
        for _ in range(200):
            mid = math.sqrt(a * b)
            nevals += 1
            if time_violation(mid) > FEAS_TOL:
                a = mid
            else:
                b = mid
            if b / a - 1.0 < 1e-13:
                break
        lo = b

    def energy_of_log(x):
        _, outcome, _ = evaluate(math.exp(x))
        return outcome.e_tot

    x_best, _, n = _golden_min(energy_of_log, math.log(lo), math.log(r_hat))
    return report(math.exp(x_best), "converged", nevals + n)
