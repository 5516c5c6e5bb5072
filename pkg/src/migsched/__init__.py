"""Energy-minimal bandwidth scheduling for pre-copy VM live migration over wireless links."""

from ._kernels import BACKEND
from .model import (
    FEAS_TOL,
    InfeasibleProblemError,
    InvalidScheduleError,
    MigrationOutcome,
    PowerModel,
    QosConstraints,
    RateSchedule,
    ResidualReport,
    StageConstants,
    WirelessScenario,
    Workload,
    constraint_residuals,
    min_feasible_rounds,
    simulate,
)
from .baselines import XenOutcome, XenPolicy, solve_bmop, xen_evaluate, xen_schedule
from .harness import ComparisonRow, SweepCell, compare_protocol, savings, workload_sweep
from .partition import RatePartition, build_partition, expand
from .solver import (
    ReducedProblem,
    SolverOptions,
    SolverReport,
    brute_force_oracle,
    optimize_rounds,
    solve_tcbm,
)
from .tracker import (
    ParameterTimeline,
    TrackerConfig,
    TrackerState,
    TrackerTrace,
    run_tracker,
    settling_time,
    tracker_step,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "FEAS_TOL",
    "ComparisonRow",
    "InfeasibleProblemError",
    "InvalidScheduleError",
    "MigrationOutcome",
    "ParameterTimeline",
    "PowerModel",
    "QosConstraints",
    "RatePartition",
    "RateSchedule",
    "ReducedProblem",
    "ResidualReport",
    "SolverOptions",
    "SolverReport",
    "StageConstants",
    "SweepCell",
    "TrackerConfig",
    "TrackerState",
    "TrackerTrace",
    "WirelessScenario",
    "Workload",
    "XenOutcome",
    "XenPolicy",
    "brute_force_oracle",
    "build_partition",
    "compare_protocol",
    "constraint_residuals",
    "expand",
    "min_feasible_rounds",
    "optimize_rounds",
    "run_tracker",
    "savings",
    "settling_time",
    "simulate",
    "solve_bmop",
    "solve_tcbm",
    "tracker_step",
    "workload_sweep",
    "xen_evaluate",
    "xen_schedule",
]
