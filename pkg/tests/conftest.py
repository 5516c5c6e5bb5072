"""Shared test helpers: seeded random instances and an independent recursion oracle."""

import numpy as np
import pytest

from migsched import (
    PowerModel,
    QosConstraints,
    RateSchedule,
    StageConstants,
    WirelessScenario,
    Workload,
    build_partition,
    simulate,
)


def recursion_oracle(rates, m0, w, k0, alpha, e_setup=0.0):
    """Plain-float re-implementation of the round recursion.

    Deliberately independent of the package internals: energies are computed
    as power * time rather than via the k0 * R**(alpha-1) * V shortcut.
    """
    vols = [m0]
    for r in rates[:-1]:
        vols.append(w * vols[-1] / r)
    times = [v / r for v, r in zip(vols, rates)]
    energy = e_setup + sum((k0 * r ** alpha) * t for r, t in zip(rates, times))
    return vols, times, energy


def random_instance(rng, i_max_range=(0, 3), theta=None, q="mixed", alpha_range=(1.2, 3.0)):
    """A feasible-by-construction random instance.

    Deltas are sampled as multiples of the all-at-cap times, which minimise
    both constrained quantities, so feasibility is guaranteed while leaving
    the constraints active for small multiples.
    """
    r_hat = float(np.exp(rng.uniform(np.log(1.0), np.log(50.0))))
    w = float(r_hat * rng.uniform(0.05, 0.4))
    beta = float(min(1.0 + rng.uniform(0.2, 1.5), 0.95 * r_hat / w))
    beta = max(beta, 1.01)
    scenario = WirelessScenario(
        "random",
        r_hat=r_hat,
        e_setup=float(rng.uniform(0.0, 6.0)),
        power=PowerModel(float(rng.uniform(0.05, 1.0)), float(rng.uniform(*alpha_range))),
    )
    workload = Workload(m0=float(rng.uniform(32.0, 512.0)), dirty_rate=w)
    i_max = int(rng.integers(i_max_range[0], i_max_range[1] + 1))
    if q == "mixed":
        q_val = 0 if i_max == 0 else int(rng.choice([1, i_max]))
    elif q == "one":
        q_val = 0 if i_max == 0 else 1
    else:
        q_val = q if i_max > 0 else 0
    if theta is None:
        theta = int(rng.integers(0, 2))
    cap_outcome = simulate(RateSchedule.constant(i_max, r_hat), workload, scenario)
    qos = QosConstraints(
        delta_tm=float(cap_outcome.t_tm * 10 ** rng.uniform(0.02, 1.0)),
        delta_dt=float(cap_outcome.t_dt * 10 ** rng.uniform(0.02, 1.5)),
        beta=beta,
        theta=theta,
    )
    return scenario, workload, qos, StageConstants(), build_partition(i_max, q_val)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
