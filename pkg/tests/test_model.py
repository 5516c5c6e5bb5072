import numpy as np
import pytest

from migsched import (
    FEAS_TOL,
    InvalidScheduleError,
    PowerModel,
    QosConstraints,
    RateSchedule,
    StageConstants,
    WirelessScenario,
    Workload,
    build_partition,
    constraint_residuals,
    min_feasible_rounds,
    simulate,
)
from conftest import random_instance, recursion_oracle


def scenario_of(r_hat=10.0, e_setup=0.0, k0=1.0, alpha=2.0):
    return WirelessScenario("test", r_hat, e_setup, PowerModel(k0, alpha))


class TestSimulate:
    def test_constant_rate_two_rounds(self):
        # M0=256, w=1, R=2 everywhere: volumes halve every round
        out = simulate(RateSchedule.constant(1, 2.0), Workload(256.0, 1.0), scenario_of())
        assert np.allclose(out.volumes, [256.0, 128.0, 64.0])
        assert np.allclose(out.round_times, [128.0, 64.0, 32.0])
        assert out.t_ip == 192.0
        assert out.t_sc == 32.0
        assert out.t_mmt == 224.0
        assert out.t_dt == 32.0
        assert out.t_tm == 224.0
        assert out.e_tot == pytest.approx(896.0, rel=1e-12)

    def test_zero_dirty_rate(self):
        out = simulate(RateSchedule(0, (2.0, 2.0)), Workload(100.0, 0.0),
                       scenario_of(e_setup=5.0))
        assert np.allclose(out.volumes, [100.0, 0.0])
        assert out.t_sc == 0.0
        assert out.t_dt == 0.0
        assert out.e_tot == pytest.approx(205.0, rel=1e-12)

    def test_ramp_schedule_matches_independent_recursion(self):
        rates = (5.0, 18.333333333333332, 31.666666666666664, 45.0)
        wl = Workload(90.0, 5.0)
        out = simulate(RateSchedule(2, rates), wl, scenario_of())
        vols, times, energy = recursion_oracle(rates, 90.0, 5.0, 1.0, 2.0)
        assert np.allclose(out.volumes, vols, rtol=1e-12)
        assert np.allclose(out.round_times, times, rtol=1e-12)
        assert out.e_tot == pytest.approx(energy, rel=1e-12)
        assert np.allclose(out.volumes, [90.0, 90.0, 24.545454545454547, 3.8755980861244023])
        assert out.e_tot == pytest.approx(3051.7, rel=1e-4)

    def test_rejects_nonpositive_rate(self):
        with pytest.raises(InvalidScheduleError):
            RateSchedule(1, (2.0, 0.0, 1.0))
        with pytest.raises(InvalidScheduleError):
            RateSchedule(1, (2.0, -1.0, 1.0))

    def test_rejects_length_mismatch(self):
        with pytest.raises(InvalidScheduleError):
            RateSchedule(2, (1.0, 1.0))


class TestModelProperties:
    def test_volume_recursion_exactness(self, rng):
        for _ in range(50):
            scenario, workload, _, stages, partition = random_instance(rng, (0, 6))
            rates = np.exp(rng.uniform(np.log(scenario.r_hat * 1e-3),
                                       np.log(scenario.r_hat), partition.i_max + 2))
            schedule = RateSchedule(partition.i_max, tuple(rates))
            out = simulate(schedule, workload, scenario, stages)
            for i in range(partition.i_max + 1):
                lhs = out.volumes[i + 1] * schedule.rates[i]
                rhs = workload.dirty_rate * out.volumes[i]
                assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1e-300)

    def test_geometric_decay_under_speedup_bound(self, rng):
        # all updated (and copied) rates satisfying the speed-up bound force
        # per-round volume reduction by at least beta
        for _ in range(30):
            scenario, workload, qos, stages, partition = random_instance(rng, (1, 5), theta=1)
            lo = qos.beta * workload.dirty_rate
            if lo > scenario.r_hat:
                continue
            reduced = np.exp(rng.uniform(np.log(lo), np.log(scenario.r_hat),
                                         partition.n_reduced))
            from migsched import expand
            schedule = expand(partition, reduced)
            out = simulate(schedule, workload, scenario, stages)
            res = constraint_residuals(out, schedule, qos, scenario, partition.updated_indices)
            assert all(v <= FEAS_TOL for v in res.psi3.values())
            for i in range(partition.i_max + 1):
                assert out.volumes[i + 1] <= out.volumes[i] / qos.beta * (1 + 1e-12)

    def test_constant_rate_energy_closed_form(self, rng):
        for _ in range(30):
            scenario, workload, _, stages, partition = random_instance(rng, (0, 6))
            r = float(rng.uniform(scenario.r_hat * 0.2, scenario.r_hat))
            out = simulate(RateSchedule.constant(partition.i_max, r), workload, scenario, stages)
            k0, alpha = scenario.power.k0, scenario.power.alpha
            ratio = workload.dirty_rate / r
            series = sum(ratio ** i for i in range(partition.i_max + 2))
            closed = k0 * r ** (alpha - 1.0) * workload.m0 * series
            assert out.e_tot - scenario.e_setup == pytest.approx(closed, rel=1e-9)

    def test_raising_one_rate_shrinks_times(self, rng):
        for _ in range(30):
            scenario, workload, _, stages, partition = random_instance(rng, (1, 5),
                                                                       alpha_range=(1.0, 3.0))
            i_max = partition.i_max
            rates = list(rng.uniform(scenario.r_hat * 0.2, scenario.r_hat * 0.8, i_max + 2))
            j = int(rng.integers(0, i_max + 2))
            bumped = list(rates)
            bumped[j] *= 1.3
            base = simulate(RateSchedule(i_max, tuple(rates)), workload, scenario, stages)
            more = simulate(RateSchedule(i_max, tuple(bumped)), workload, scenario, stages)
            assert more.t_mmt <= base.t_mmt * (1 + 1e-12)
            assert more.t_dt <= base.t_dt * (1 + 1e-12)
            power = scenario.power.power
            assert power(bumped[j]) >= power(rates[j])  # alpha >= 1

    def test_doubling_memory_doubles_linear_quantities(self, rng):
        for _ in range(20):
            scenario, workload, _, stages, partition = random_instance(rng, (0, 5))
            rates = tuple(rng.uniform(scenario.r_hat * 0.1, scenario.r_hat, partition.i_max + 2))
            schedule = RateSchedule(partition.i_max, rates)
            base = simulate(schedule, workload, scenario, stages)
            double = simulate(schedule, Workload(2 * workload.m0, workload.dirty_rate),
                              scenario, stages)
            assert np.allclose(double.volumes, 2 * base.volumes, rtol=1e-12)
            assert np.allclose(double.round_times, 2 * base.round_times, rtol=1e-12)
            assert (double.e_tot - scenario.e_setup) == pytest.approx(
                2 * (base.e_tot - scenario.e_setup), rel=1e-12)


class TestResiduals:
    def test_downtime_ratio(self):
        sc = scenario_of(r_hat=100.0)
        out = simulate(RateSchedule.constant(1, 2.0), Workload(256.0, 1.0), sc)
        qos = QosConstraints(delta_tm=1e6, delta_dt=64.0, beta=2.0, theta=1)
        res = constraint_residuals(out, RateSchedule.constant(1, 2.0), qos, sc, (0, 1, 2))
        assert res.psi2 == pytest.approx(-0.5, abs=1e-12)

    def test_theta_zero_disables_time_and_speedup(self):
        sc = scenario_of(r_hat=100.0)
        sched = RateSchedule.constant(1, 2.0)
        out = simulate(sched, Workload(256.0, 1.0), sc)
        qos = QosConstraints(delta_tm=1.0, delta_dt=64.0, beta=2.0, theta=0)
        res = constraint_residuals(out, sched, qos, sc, (0, 1, 2))
        assert res.psi1 == 0.0
        assert all(v == 0.0 for v in res.psi3.values())

    def test_speedup_boundary(self):
        sc = scenario_of(r_hat=100.0)
        sched = RateSchedule(0, (8.0, 8.0))
        out = simulate(sched, Workload(100.0, 4.0), sc)
        qos = QosConstraints(delta_tm=1e6, delta_dt=1e6, beta=2.0, theta=1)
        res = constraint_residuals(out, sched, qos, sc, (0, 1))
        assert res.psi3[0] == pytest.approx(0.0, abs=1e-12)

    def test_cap_residual_per_rate(self):
        sc = scenario_of(r_hat=10.0)
        sched = RateSchedule(0, (5.0, 10.0))
        out = simulate(sched, Workload(100.0, 1.0), sc)
        qos = QosConstraints(1e6, 1e6, 2.0, 1)
        res = constraint_residuals(out, sched, qos, sc, (0, 1))
        assert res.psi4[0] == pytest.approx(-0.5)
        assert res.psi4[1] == pytest.approx(0.0, abs=1e-12)


class TestMinFeasibleRounds:
    def test_wifi_like_case(self):
        sc = scenario_of(r_hat=9.9)
        qos = QosConstraints(delta_tm=1e9, delta_dt=2.55e-2, beta=2.0, theta=0)
        assert min_feasible_rounds(Workload(256.0, 4.0), sc, qos) == 7

    def test_zero_dirty_rate_needs_no_rounds(self):
        sc = scenario_of()
        qos = QosConstraints(delta_tm=1e9, delta_dt=1.0, beta=2.0, theta=1)
        assert min_feasible_rounds(Workload(256.0, 0.0), sc, qos) == 0

    def test_speedup_exceeding_cap_is_infeasible(self):
        sc = scenario_of(r_hat=9.9)
        qos = QosConstraints(delta_tm=1e9, delta_dt=1.0, beta=2.33, theta=1)
        assert min_feasible_rounds(Workload(256.0, 5.0), sc, qos) is None

    def test_downtime_overhead_exceeding_budget_is_infeasible(self):
        sc = scenario_of()
        qos = QosConstraints(delta_tm=1e9, delta_dt=0.5, beta=2.0, theta=1)
        stages = StageConstants(t_cm=0.4, t_at=0.2)
        assert min_feasible_rounds(Workload(256.0, 1.0), sc, qos, stages) is None

    def test_agrees_with_simulate_scan(self, rng):
        # the closed-form scan must match checking the all-at-cap schedule
        # through simulate + residuals for every candidate round count
        for _ in range(10):
            scenario, workload, qos, stages, _ = random_instance(rng, (0, 3))
            got = min_feasible_rounds(workload, scenario, qos, stages)
            expected = None
            for i in range(65):
                sched = RateSchedule.constant(i, scenario.r_hat)
                out = simulate(sched, workload, scenario, stages)
                res = constraint_residuals(out, sched, qos, scenario, range(i + 2))
                if max(res.psi1, res.psi2) <= FEAS_TOL:
                    expected = i
                    break
            assert got == expected
