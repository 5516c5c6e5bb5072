"""Online primal-dual tracking of the energy-optimal schedule.

The tracker re-solves the reduced problem incrementally while the workload
dirty rate or the power coefficient jump: every iteration takes one clipped
gradient step on the Lagrangian in log-rate space, one dual ascent step on
the time-constraint multipliers, and projects the rates back onto the
speed-up/cap box.  The per-coordinate step cap ``a_max`` trades transient
length against steady-state stability.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .model import StageConstants, constraint_residuals, simulate
from .solver import ReducedProblem, _initial_point

# Fixed update-rule gains, calibrated once against the batch solver on the
# built-in scenario presets.  Dual dynamics: additive capped growth while a
# constraint is violated, multiplicative decay once it is satisfied (fast
# recovery after a downward parameter jump without biasing the fixed point).
_PRIMAL_GAIN = 0.5
_DUAL_GAIN = 2.0
_DUAL_CAP = 1e4
_PENALTY = 5.0  # quadratic damping on violated constraints


@dataclass(frozen=True)
class TrackerConfig:
    a_max: float = 0.5            # per-coordinate step cap in log-rate space
    horizon: int = 90             # iterations to run
    settle_tolerance: float = 0.01  # relative band defining steady state

    def __post_init__(self):
        if not self.a_max > 0:
            raise ValueError("a_max must be > 0")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not self.settle_tolerance > 0:
            raise ValueError("settle_tolerance must be > 0")


@dataclass(frozen=True)
class ParameterTimeline:
    """Piecewise-constant dirty rate and power coefficient over iterations."""

    change_points: tuple  # segment start iterations, first must be 0
    w_values: tuple
    k0_values: tuple

    def __post_init__(self):
        n = len(self.change_points)
        if n == 0 or self.change_points[0] != 0:
            raise ValueError("change_points must start at 0")
        if tuple(sorted(self.change_points)) != tuple(self.change_points):
            raise ValueError("change_points must be increasing")
        if len(self.w_values) != n or len(self.k0_values) != n:
            raise ValueError("w_values/k0_values must match change_points")
        if any(v <= 0 for v in self.w_values) or any(v <= 0 for v in self.k0_values):
            raise ValueError("timeline values must be positive")

    @classmethod
    def constant(cls, w_bar, k0):
        return cls((0,), (w_bar,), (k0,))

    @classmethod
    def steps(cls, change_points, w_values=None, k0_values=None, *, w_bar=None, k0=None):
        n = len(change_points)
        w_values = tuple(w_values) if w_values is not None else (w_bar,) * n
        k0_values = tuple(k0_values) if k0_values is not None else (k0,) * n
        return cls(tuple(change_points), w_values, k0_values)

    def segment_index(self, n):
        j = 0
        for k, start in enumerate(self.change_points):
            if n >= start:
                j = k
        return j

    def at(self, n):
        j = self.segment_index(n)
        return self.w_values[j], self.k0_values[j]

    def segment_bounds(self, j, horizon):
        start = self.change_points[j]
        end = self.change_points[j + 1] if j + 1 < len(self.change_points) else horizon
        return start, end


@dataclass(frozen=True)
class TrackerState:
    x: np.ndarray    # reduced log-rates
    lam: np.ndarray  # multipliers (downtime, total-time)


@dataclass(frozen=True)
class TrackerTrace:
    """Per-iteration record of a tracking run."""

    n: np.ndarray
    w_bar: np.ndarray
    k0: np.ndarray
    energy: np.ndarray
    rates: np.ndarray        # (horizon, q + 2) reduced rates
    feasible: np.ndarray     # QoS residuals satisfied at this iterate
    box_infeasible: np.ndarray  # speed-up floor exceeded the cap (empty box)
    timeline: ParameterTimeline = field(repr=False, default=None)

    def to_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        d = self.rates.shape[1]
        writer.writerow(["n", "w_bar", "k0", "E_tot", "feasible"] + [f"R_{j}" for j in range(d)])
        for i in range(len(self.n)):
            writer.writerow(
                [int(self.n[i]), repr(float(self.w_bar[i])), repr(float(self.k0[i])),
                 repr(float(self.energy[i])), int(self.feasible[i])]
                + [repr(float(r)) for r in self.rates[i]]
            )
        return out.getvalue()


def tracker_step(state, problem, config):
    """One primal-dual iteration against the current problem parameters.

    Primal: one step along the augmented-Lagrangian descent direction in
    log-rate space, each coordinate clipped to magnitude <= a_max, backtracked
    until the merit does not increase.  Dual: ascent on the log-form time
    residuals, projected to >= 0.  Finally the primal is projected onto the
    speed-up/cap box.
    """
    lb = problem.lb_relaxed
    ub = problem.ub
    x, lam = state.x, state.lam
    val, grad = problem.al_value_grad(x, lam, _PENALTY)
    step = np.clip(-_PRIMAL_GAIN * grad, -config.a_max, config.a_max)
    x_new = np.clip(x + step, lb, ub)
    t = 1.0
    for _ in range(10):
        if problem.al_value_grad(x_new, lam, _PENALTY)[0] <= val or not np.any(x_new != x):
            break
        t *= 0.5
        x_new = np.clip(x + t * step, lb, ub)

    g_new = problem.eval(x_new)[2]
    lam_new = lam.copy()
    for k in range(len(g_new)):
        if g_new[k] >= 0.0:
            lam_new[k] = min(lam[k] + _DUAL_GAIN * g_new[k], _DUAL_CAP)
        else:
            lam_new[k] = lam[k] * np.exp(_DUAL_GAIN * g_new[k])
    return TrackerState(x=x_new, lam=lam_new)


def run_tracker(scenario, workload, qos, stages=StageConstants(), partition=None,
                timeline=None, config=TrackerConfig()):
    """Iterate the tracker over a parameter timeline and record the trace."""
    if partition is None:
        raise ValueError("partition is required")
    if timeline is None:
        timeline = ParameterTimeline.constant(workload.dirty_rate, scenario.power.k0)

    def problem_at(n):
        w, k0 = timeline.at(n)
        sc = replace(scenario, power=replace(scenario.power, k0=k0))
        wl = replace(workload, dirty_rate=w)
        return ReducedProblem(sc, wl, qos, stages, partition), sc, wl

    prob0, _, _ = problem_at(0)
    m = 2 if qos.theta else 1
    state = TrackerState(x=_initial_point(prob0), lam=np.zeros(m))

    h = config.horizon
    d = partition.n_reduced
    trace = TrackerTrace(
        n=np.arange(h),
        w_bar=np.empty(h),
        k0=np.empty(h),
        energy=np.empty(h),
        rates=np.empty((h, d)),
        feasible=np.zeros(h, dtype=bool),
        box_infeasible=np.zeros(h, dtype=bool),
        timeline=timeline,
    )
    for n in range(h):
        problem, sc_n, wl_n = problem_at(n)
        state = tracker_step(state, problem, config)
        schedule = problem.schedule_at(state.x)
        outcome = simulate(schedule, wl_n, sc_n, stages)
        res = constraint_residuals(outcome, schedule, qos, sc_n, partition.updated_indices)
        w_n, k0_n = timeline.at(n)
        trace.w_bar[n] = w_n
        trace.k0[n] = k0_n
        trace.energy[n] = outcome.e_tot
        trace.rates[n] = np.exp(state.x)
        trace.feasible[n] = res.feasible()
        trace.box_infeasible[n] = problem.box_empty
    return trace


def settling_time(trace, segment, tolerance=0.01):
    """Iterations from a segment's start until the energy stays within
    ``tolerance`` (relative) of the segment's final value; None if only the
    final sample is inside the band (the segment never settled)."""
    start, end = trace.timeline.segment_bounds(segment, len(trace.n))
    e = trace.energy[start:end]
    ref = e[-1]
    band = tolerance * abs(ref)
    inside = np.abs(e - ref) <= band
    k = len(e) - 1
    while k > 0 and inside[k - 1]:
        k -= 1
    if k == len(e) - 1 and len(e) > 1:
        return None
    return k
