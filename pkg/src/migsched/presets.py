"""Built-in wireless scenarios, QoS defaults, and workload/tracking profiles.

Channel constants follow typical 3G-UTRAN, IEEE 802.11b and 4G-LTE links:
the cap is 90% of the nominal link throughput, the setup energy is the
rate-independent connection cost, and the power model is quadratic in the
rate with a per-technology coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PowerModel, QosConstraints, StageConstants, WirelessScenario, Workload, min_feasible_rounds
from .partition import build_partition
from .tracker import ParameterTimeline

SCENARIOS = {
    "3g": WirelessScenario("3G", r_hat=0.9 * 2.0, e_setup=3.25, power=PowerModel(0.18, 2.0)),
    "wifi": WirelessScenario("WiFi", r_hat=0.9 * 11.0, e_setup=5.9, power=PowerModel(0.05, 2.0)),
    "4g": WirelessScenario("4G", r_hat=0.9 * 50.0, e_setup=5.1, power=PowerModel(0.09, 2.0)),
}

# QoS defaults and the base memtester dirty rate used by the tracking runs.
QOS_DEFAULTS = {
    "3g": QosConstraints(delta_tm=1460.0, delta_dt=0.14, beta=2.0),
    "4g": QosConstraints(delta_tm=58.6, delta_dt=5.61e-3, beta=2.33),
    "wifi": QosConstraints(delta_tm=266.0, delta_dt=2.55e-2, beta=2.33),
}
BASE_DIRTY_RATE = {"3g": 0.8, "4g": 11.25, "wifi": 4.0}
DEFAULT_M0 = 256.0


def scenario(name):
    return SCENARIOS[_key(name)]


def qos_defaults(name):
    return QOS_DEFAULTS[_key(name)]


def default_workload(name):
    return Workload(m0=DEFAULT_M0, dirty_rate=BASE_DIRTY_RATE[_key(name)])


def tracking_partition(name, q=1, margin=4):
    """Partition used by the tracking runs.

    ``margin`` extra rounds past the feasibility minimum give the optimiser
    slack below the rate cap, so the energy transient is visible rather than
    pinned at the all-cap corner.
    """
    key = _key(name)
    i_min = min_feasible_rounds(default_workload(key), SCENARIOS[key], QOS_DEFAULTS[key])
    if i_min is None:
        raise ValueError(f"preset {key} has no feasible round count")
    i_max = max(i_min + margin, 1)
    return build_partition(i_max, min(q, i_max))


# Step profiles for the tracking experiments: the middle segment triples the
# nominal parameter (dirty rate) or scales the power coefficient by 10
# (by 100 for 3G, which keeps its historically larger excursion).
_W_STEPS = {"3g": (0.8, 1.5, 0.8), "4g": (11.25, 24.0, 11.25), "wifi": (4.0, 8.0, 4.0)}
_K0_STEPS = {"3g": (0.18, 18.0, 0.18), "4g": (0.09, 0.9, 0.09), "wifi": (0.05, 0.5, 0.05)}
_CHANGES = (0, 30, 60)


def tracking_profile(profile):
    """Named tracking profiles: ``w-<scenario>`` jumps the dirty rate,
    ``k0-<scenario>`` jumps the power coefficient (change points 30 and 60)."""
    kind, _, name = profile.partition("-")
    key = _key(name)
    sc = SCENARIOS[key]
    if kind == "w":
        timeline = ParameterTimeline.steps(_CHANGES, w_values=_W_STEPS[key], k0=sc.power.k0)
    elif kind == "k0":
        timeline = ParameterTimeline.steps(_CHANGES, k0_values=_K0_STEPS[key], w_bar=BASE_DIRTY_RATE[key])
    else:
        raise ValueError(f"unknown tracking profile {profile!r}")
    return key, timeline


@dataclass(frozen=True)
class WorkloadPreset:
    name: str
    workload: Workload


def application_workloads(name, m0=DEFAULT_M0, fractions=(0.25, 0.5, 0.9)):
    """bzip2 < mcf < memcached dirty-rate presets for a scenario.

    Rates are fractions of the largest dirty rate the scenario can sustain
    under its speed-up constraint (cap / beta); only the ordering is load
    bearing, and callers may override the fractions.
    """
    key = _key(name)
    w_max = SCENARIOS[key].r_hat / QOS_DEFAULTS[key].beta
    names = ("bzip2", "mcf", "memcached")
    return [WorkloadPreset(n, Workload(m0=m0, dirty_rate=f * w_max))
            for n, f in zip(names, fractions)]


def _key(name):
    key = name.lower()
    if key not in SCENARIOS:
        raise ValueError(f"unknown scenario preset {name!r} (use 3g, 4g, or wifi)")
    return key
