import numpy as np
import pytest

from migsched import (
    InfeasibleProblemError,
    PowerModel,
    QosConstraints,
    ReducedProblem,
    SolverOptions,
    StageConstants,
    WirelessScenario,
    Workload,
    build_partition,
    expand,
    optimize_rounds,
    simulate,
    solve_tcbm,
)
from conftest import random_instance

# Two-rate instance with a hand-solvable optimum: the downtime bound is the
# only active constraint, stationarity gives R0**3 = 50, R1 = 25 / R0.
KKT_SCENARIO = WirelessScenario("test", 10.0, 0.0, PowerModel(1.0, 2.0))
KKT_WORKLOAD = Workload(100.0, 1.0)
KKT_QOS = QosConstraints(delta_tm=100.0, delta_dt=4.0, beta=2.0, theta=1)
KKT_R0 = 50.0 ** (1.0 / 3.0)
KKT_R1 = 25.0 / KKT_R0
KKT_ENERGY = 100.0 * (KKT_R0 + KKT_R1 / KKT_R0)


def test_two_rate_instance_exact_optimum():
    rep = solve_tcbm(KKT_SCENARIO, KKT_WORKLOAD, KKT_QOS, StageConstants(),
                     build_partition(0, 0))
    assert rep.status == "converged"
    assert rep.feasible
    assert rep.schedule.rates[0] == pytest.approx(KKT_R0, rel=1e-6)
    assert rep.schedule.rates[1] == pytest.approx(KKT_R1, rel=1e-6)
    assert rep.energy == pytest.approx(KKT_ENERGY, rel=1e-9)
    # the downtime constraint is active
    assert rep.outcome.t_sc == pytest.approx(4.0, abs=1e-6)


def test_zero_dirty_rate_shortcut():
    scenario = WirelessScenario("test", 10.0, 5.0, PowerModel(1.0, 2.0))
    workload = Workload(100.0, 0.0)
    qos = QosConstraints(delta_tm=50.0, delta_dt=10.0, beta=2.0, theta=1)
    rep = solve_tcbm(scenario, workload, qos, StageConstants(), build_partition(0, 0))
    assert rep.status == "converged"
    # smallest rate meeting the total-time bound: m0 / delta_tm
    assert rep.schedule.rates[0] == pytest.approx(2.0, rel=1e-12)
    assert rep.energy == pytest.approx(5.0 + 1.0 * 2.0 * 100.0, rel=1e-12)


def test_contradictory_speedup_and_cap_is_infeasible():
    scenario = WirelessScenario("test", 9.9, 0.0, PowerModel(1.0, 2.0))
    workload = Workload(256.0, 5.0)
    qos = QosConstraints(delta_tm=1e6, delta_dt=1e6, beta=2.33, theta=1)
    rep = solve_tcbm(scenario, workload, qos, StageConstants(), build_partition(2, 1))
    assert rep.status == "infeasible"
    assert not rep.feasible
    assert rep.hint_min_rounds is None


def test_unreachable_downtime_reports_hint():
    scenario = WirelessScenario("test", 10.0, 0.0, PowerModel(1.0, 2.0))
    workload = Workload(256.0, 4.0)
    qos = QosConstraints(delta_tm=1e6, delta_dt=1e-3, beta=2.0, theta=1)
    rep = solve_tcbm(scenario, workload, qos, StageConstants(), build_partition(1, 1))
    assert rep.status == "infeasible"
    assert rep.hint_min_rounds == 11  # 256*(0.4)**(i+1)/10 <= 1e-3 first at i = 11


def test_kkt_stationarity_by_finite_differences(rng):
    checked = 0
    for _ in range(15):
        scenario, workload, qos, stages, partition = random_instance(rng)
        rep = solve_tcbm(scenario, workload, qos, stages, partition)
        assert rep.status == "converged"
        prob = ReducedProblem(scenario, workload, qos, stages, partition)
        x = np.asarray(rep.log_rates)
        lam = np.asarray(rep.multipliers)
        for j in range(len(x)):
            if x[j] - prob.lb[j] < 1e-7 or prob.ub[j] - x[j] < 1e-7:
                continue
            h = 1e-5
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            fd = (prob.al_value_grad(xp, lam, rep.penalty)[0]
                  - prob.al_value_grad(xm, lam, rep.penalty)[0]) / (2 * h)
            assert abs(fd) <= 1e-6
            checked += 1
    assert checked > 10


def test_log_convexity_of_energy_and_times(rng):
    for _ in range(10):
        scenario, workload, qos, stages, partition = random_instance(rng, (1, 4))
        prob = ReducedProblem(scenario, workload, qos, stages, partition)

        def metrics(x):
            out = simulate(expand(partition, np.exp(x)), workload, scenario, stages)
            return np.log([out.e_tot, out.t_mmt, max(out.t_dt, 1e-300)])

        for _ in range(10):
            x = rng.uniform(prob.lb, prob.ub)
            y = rng.uniform(prob.lb, prob.ub)
            fx, fy = metrics(x), metrics(y)
            for t in (0.25, 0.5, 0.75):
                fm = metrics(t * x + (1 - t) * y)
                assert np.all(fm <= t * fx + (1 - t) * fy + 1e-9)


def test_nested_partitions_do_not_worsen(rng):
    scenario, workload, qos, stages, _ = random_instance(rng, (6, 6), theta=1)
    energies = {}
    for q in (1, 2, 3, 6):
        rep = solve_tcbm(scenario, workload, qos, stages, build_partition(6, q))
        assert rep.status == "converged"
        energies[q] = rep.energy
    tol = SolverOptions().tolerance
    for q, q2 in ((1, 2), (1, 3), (2, 6), (3, 6), (1, 6)):
        assert energies[q2] <= energies[q] * (1 + tol) + 1e-9


def test_optimize_rounds_zero_dirty_rate():
    scenario = WirelessScenario("test", 10.0, 1.0, PowerModel(1.0, 2.0))
    workload = Workload(100.0, 0.0)
    qos = QosConstraints(delta_tm=50.0, delta_dt=10.0, beta=2.0, theta=1)
    i_best, rep = optimize_rounds(scenario, workload, qos, StageConstants(), 1)
    assert i_best == 0  # ties on energy resolve to the fewest rounds
    assert rep.status == "converged"


def test_optimize_rounds_single_candidate():
    opts = SolverOptions(round_cap=0)
    i_best, rep = optimize_rounds(KKT_SCENARIO, KKT_WORKLOAD, KKT_QOS,
                                  StageConstants(), 1, opts)
    assert i_best == 0
    assert rep.energy == pytest.approx(KKT_ENERGY, rel=1e-9)


def test_optimize_rounds_all_infeasible():
    scenario = WirelessScenario("test", 9.9, 0.0, PowerModel(1.0, 2.0))
    workload = Workload(256.0, 5.0)
    qos = QosConstraints(delta_tm=1e6, delta_dt=1e6, beta=2.33, theta=1)
    with pytest.raises(InfeasibleProblemError):
        optimize_rounds(scenario, workload, qos, StageConstants(), 1)


def test_q_rule_forms(rng):
    scenario, workload, qos, stages, _ = random_instance(rng, (3, 3), theta=0)
    i1, rep1 = optimize_rounds(scenario, workload, qos, stages, "full",
                               SolverOptions(round_cap=4))
    i2, rep2 = optimize_rounds(scenario, workload, qos, stages, lambda i: i,
                               SolverOptions(round_cap=4))
    assert i1 == i2
    assert rep1.energy == pytest.approx(rep2.energy, rel=1e-9)


def test_converged_reports_satisfy_reported_invariants(rng):
    opts = SolverOptions()
    for _ in range(20):
        scenario, workload, qos, stages, partition = random_instance(rng)
        rep = solve_tcbm(scenario, workload, qos, stages, partition, opts)
        assert rep.status == "converged"
        assert rep.max_residual <= opts.tolerance
        assert rep.feasible
