"""Deterministic forward model of pre-copy VM live migration.

A migration transfers a memory image of size ``m0`` over ``i_max + 2`` rounds:
round 0 copies the full image, rounds 1..i_max re-copy pages dirtied while the
previous round ran, and the final round is the stop-and-copy with the VM
halted.  With a mean dirty rate ``w`` and per-round bandwidths ``R_i``, the
copied volumes follow ``V_0 = m0`` and ``V_{i+1} = w * V_i / R_i``.

Units are fixed throughout: Mb, Mb/s, s, J, W.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# A constraint residual within this tolerance of zero counts as satisfied.
FEAS_TOL = 1e-9


class InvalidScheduleError(ValueError):
    """A rate schedule violates its structural invariants."""


class InfeasibleProblemError(RuntimeError):
    """No schedule can satisfy the QoS constraints."""


@dataclass(frozen=True)
class PowerModel:
    """Transmit power as a monomial of the migration bandwidth: k0 * R**alpha."""

    k0: float     # W per (Mb/s)**alpha
    alpha: float  # rate exponent

    def __post_init__(self):
        if not self.k0 > 0:
            raise ValueError("power model k0 must be > 0")
        if not self.alpha > 0:
            raise ValueError("power model alpha must be > 0")

    def power(self, rate):
        return self.k0 * rate ** self.alpha


@dataclass(frozen=True)
class WirelessScenario:
    """Channel and energy constants of the wireless link carrying the migration."""

    name: str
    r_hat: float    # maximum migration bandwidth (Mb/s)
    e_setup: float  # static, rate-independent connection energy (J)
    power: PowerModel

    def __post_init__(self):
        if not self.r_hat > 0:
            raise ValueError("r_hat must be > 0")
        if self.e_setup < 0:
            raise ValueError("e_setup must be >= 0")


@dataclass(frozen=True)
class Workload:
    """The migrating VM: memory size and mean dirty rate."""

    m0: float          # memory size (Mb)
    dirty_rate: float  # mean dirty rate (Mb/s)

    def __post_init__(self):
        if not self.m0 > 0:
            raise ValueError("m0 must be > 0")
        if self.dirty_rate < 0:
            raise ValueError("dirty_rate must be >= 0")


@dataclass(frozen=True)
class StageConstants:
    """Fixed durations of the rate-independent migration stages (s)."""

    t_pm: float = 0.0  # pre-migration
    t_re: float = 0.0  # reservation
    t_cm: float = 0.0  # commitment
    t_at: float = 0.0  # activation

    def __post_init__(self):
        for name in ("t_pm", "t_re", "t_cm", "t_at"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def downtime_overhead(self):
        """Fixed part of the downtime (commitment + activation)."""
        return self.t_cm + self.t_at

    @property
    def total_overhead(self):
        """Fixed part of the total migration time (all four constant stages)."""
        return self.t_pm + self.t_re + self.t_cm + self.t_at


@dataclass(frozen=True)
class QosConstraints:
    """SLA bounds on the migration: total time, downtime, per-round speed-up.

    ``theta`` switches the total-time and speed-up constraints off (0) for
    techniques where total migration and stop-and-copy times coincide.
    """

    delta_tm: float  # max total migration time (s)
    delta_dt: float  # max downtime (s)
    beta: float      # required per-round volume reduction factor
    theta: int = 1

    def __post_init__(self):
        if not self.delta_tm > 0:
            raise ValueError("delta_tm must be > 0")
        if not self.delta_dt > 0:
            raise ValueError("delta_dt must be > 0")
        if not self.beta > 1:
            raise ValueError("beta must be > 1")
        if self.theta not in (0, 1):
            raise ValueError("theta must be 0 or 1")


@dataclass(frozen=True)
class RateSchedule:
    """Per-round migration bandwidths R_0 .. R_{i_max+1}."""

    i_max: int
    rates: tuple

    def __post_init__(self):
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        if self.i_max < 0:
            raise InvalidScheduleError("i_max must be >= 0")
        if len(self.rates) != self.i_max + 2:
            raise InvalidScheduleError(
                f"schedule needs i_max + 2 = {self.i_max + 2} rates, got {len(self.rates)}"
            )
        if any(not (r > 0) for r in self.rates):
            raise InvalidScheduleError("all rates must be > 0")

    @classmethod
    def constant(cls, i_max, rate):
        return cls(i_max, (rate,) * (i_max + 2))


@dataclass(frozen=True)
class MigrationOutcome:
    """Per-round volumes/times/energies and the aggregate migration metrics."""

    volumes: np.ndarray           # V_0 .. V_{i_max+1} (Mb)
    round_times: np.ndarray       # T_0 .. T_{i_max+1} (s)
    per_round_energy: np.ndarray  # J
    t_ip: float   # iterative pre-copy time (rounds 0..i_max)
    t_sc: float   # stop-and-copy time
    t_mmt: float  # memory migration time = t_ip + t_sc
    t_dt: float   # downtime = t_sc + commitment + activation
    t_tm: float   # total migration time
    e_tot: float  # setup energy + sum of per-round energies (J)


@dataclass(frozen=True)
class ResidualReport:
    """Constraint residuals; a schedule is feasible when all are <= 0.

    psi1: total migration time (scaled by theta).
    psi2: downtime.
    psi3: per updated pre-copy round, required speed-up (scaled by theta).
    psi4: per round, rate cap.
    """

    psi1: float
    psi2: float
    psi3: dict = field(default_factory=dict)
    psi4: dict = field(default_factory=dict)

    @property
    def worst(self):
        return max([self.psi1, self.psi2, *self.psi3.values(), *self.psi4.values()])

    def feasible(self, tol=FEAS_TOL):
        return self.worst <= tol


def simulate(schedule, workload, scenario, stages=StageConstants()):
    """Run the volume recursion for a schedule and aggregate all metrics."""
    rates = np.asarray(schedule.rates, dtype=float)
    if np.any(rates <= 0):
        raise InvalidScheduleError("all rates must be > 0")
    ratios = workload.dirty_rate / rates[:-1]
    volumes = workload.m0 * np.concatenate(([1.0], np.cumprod(ratios)))
    times = volumes / rates
    alpha = scenario.power.alpha
    energies = scenario.power.k0 * rates ** (alpha - 1.0) * volumes

    t_ip = float(times[:-1].sum())
    t_sc = float(times[-1])
    t_mmt = t_ip + t_sc
    return MigrationOutcome(
        volumes=volumes,
        round_times=times,
        per_round_energy=energies,
        t_ip=t_ip,
        t_sc=t_sc,
        t_mmt=t_mmt,
        t_dt=t_sc + stages.downtime_overhead,
        t_tm=t_mmt + stages.total_overhead,
        e_tot=scenario.e_setup + float(energies.sum()),
    )


def constraint_residuals(outcome, schedule, qos, scenario, updated_indices):
    """Evaluate the four QoS residuals for an outcome of ``schedule``.

    ``updated_indices`` lists the rounds whose rates are decision variables;
    the speed-up residual applies to round 0 and the updated pre-copy rounds
    (never to the stop-and-copy round), the rate cap to every round.
    """
    theta = qos.theta
    psi1 = theta * (outcome.t_tm / qos.delta_tm - 1.0)
    psi2 = outcome.t_dt / qos.delta_dt - 1.0
    w = qos.beta * _dirty_rate_of(outcome, schedule)
    psi3_rounds = sorted({0, *(i for i in updated_indices if i <= schedule.i_max)})
    psi3 = {i: theta * (w / schedule.rates[i] - 1.0) for i in psi3_rounds}
    psi4 = {i: r / scenario.r_hat - 1.0 for i, r in enumerate(schedule.rates)}
    return ResidualReport(psi1=psi1, psi2=psi2, psi3=psi3, psi4=psi4)


def _dirty_rate_of(outcome, schedule):
    # V_{i+1} * R_i = w * V_i for every pre-copy round; recover w from round 0.
    return outcome.volumes[1] * schedule.rates[0] / outcome.volumes[0]


def min_feasible_rounds(workload, scenario, qos, stages=StageConstants(), round_cap=64):
    """Smallest pre-copy round count admitting a feasible schedule, else None.

    At a fixed round count the all-at-cap schedule minimises both downtime and
    total time, so scanning it upward yields the true minimum.
    """
    w = workload.dirty_rate
    r = scenario.r_hat
    if qos.theta and qos.beta * w > r * (1.0 + FEAS_TOL):
        return None
    if stages.downtime_overhead > qos.delta_dt * (1.0 + FEAS_TOL):
        return None

    ratio = w / r
    vol = workload.m0  # V_i at the all-cap schedule
    t_cum = 0.0        # T_0 + .. + T_{i-1}
    for i in range(round_cap + 1):
        t_round = vol / r
        t_sc = vol * ratio / r  # the (i+1)-th round is the stop-and-copy
        t_dt = t_sc + stages.downtime_overhead
        t_tm = t_cum + t_round + t_sc + stages.total_overhead
        ok_dt = t_dt / qos.delta_dt - 1.0 <= FEAS_TOL
        ok_tm = (not qos.theta) or (t_tm / qos.delta_tm - 1.0 <= FEAS_TOL)
        if ok_dt and ok_tm:
            return i
        t_cum += t_round
        vol *= ratio
    return None
