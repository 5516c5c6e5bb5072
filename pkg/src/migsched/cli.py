"""Command-line front end: solve / compare / track / sweep / oracle.

Every command writes CSV outputs (atomically) with the fully resolved
configuration embedded as leading ``#`` comment lines, so a result file can
be re-run byte-for-byte.  Exit codes: 0 success, 1 error, 2 infeasible.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import presets
from .baselines import XenPolicy, xen_evaluate
from .config import ConfigError, RunConfig, parse_config_file
from .harness import (
    comparison_csv,
    comparison_markdown,
    compare_protocol,
    sweep_csv,
    sweep_markdown,
    workload_sweep,
)
from .model import InfeasibleProblemError, InvalidScheduleError
from .partition import build_partition
from .solver import brute_force_oracle, optimize_rounds, solve_tcbm
from .tracker import TrackerConfig, run_tracker

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


def _atomic_write(path, text):
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _config_header(config):
    return [line for line in config.to_ini_text().splitlines()]


def _with_header(config, body):
    header = "".join(f"# {line}\n" for line in _config_header(config))
    return header + body


def _load_config(args):
    config = parse_config_file(args.config) if args.config else RunConfig()
    if getattr(args, "preset", None):
        config.set("scenario", "preset", args.preset)
    for section, key, attr in (
        ("workload", "m0", "m0"),
        ("workload", "dirty_rate", "w_bar"),
        ("partition", "i_max", "i_max"),
        ("partition", "q", "q"),
        ("partition", "q_rule", "q_rule"),
        ("oracle", "grid_points", "grid_points"),
        ("compare", "xen_r_max", "xen_r_max"),
        ("compare", "cap", "cap"),
        ("sweep", "i_max_xen", "i_max_xen"),
        ("tracker", "a_max", "a_max"),
        ("tracker", "horizon", "horizon"),
        ("tracker", "profile", "profile"),
    ):
        value = getattr(args, attr, None)
        if value is not None:
            config.set(section, key, value)
    if getattr(args, "round_search", False):
        config.set("partition", "round_search", True)
    if getattr(args, "xen_rounds", None):
        config.set("compare", "xen_rounds", tuple(args.xen_rounds))
    config.set("run", "seed", args.seed)
    config.set("run", "jobs", args.jobs)
    config.set("run", "out", args.out)
    return config


def _partition_from(config):
    if config.get("partition", "round_search", False):
        return None
    i_max = config.require("partition", "i_max")
    q = config.get("partition", "q", 0 if i_max == 0 else 1)
    return build_partition(i_max, q)


def _solve_summary_csv(config, report, i_best=None):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["status", "i_max", "q", "E_tot_J", "t_tm_s", "t_dt_s", "t_mmt_s",
                     "iterations", "max_residual"])
    o = report.outcome
    writer.writerow([report.status, report.partition.i_max, report.partition.q,
                     repr(o.e_tot), repr(o.t_tm), repr(o.t_dt), repr(o.t_mmt),
                     report.iterations, repr(report.max_residual)])
    return _with_header(config, out.getvalue())


def _rounds_csv(config, report):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["round", "rate_mbps", "volume_mb", "time_s", "energy_j"])
    o = report.outcome
    for i, rate in enumerate(report.schedule.rates):
        writer.writerow([i, repr(rate), repr(float(o.volumes[i])),
                         repr(float(o.round_times[i])), repr(float(o.per_round_energy[i]))])
    return _with_header(config, out.getvalue())


def cmd_solve(args):
    config = _load_config(args)
    scenario = config.scenario()
    workload = config.workload()
    qos = config.qos()
    stages = config.stages()
    opts = config.solver_options()
    partition = _partition_from(config)
    if partition is None:
        q_rule = config.get("partition", "q_rule", 1)
        i_best, report = optimize_rounds(scenario, workload, qos, stages, q_rule, opts)
    else:
        report = solve_tcbm(scenario, workload, qos, stages, partition, opts)
        i_best = partition.i_max

    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "solve_summary.csv"),
                  _solve_summary_csv(config, report, i_best))
    _atomic_write(os.path.join(args.out, "solve_rounds.csv"), _rounds_csv(config, report))

    o = report.outcome
    print(f"status: {report.status}")
    print(f"i_max: {report.partition.i_max}  q: {report.partition.q}")
    print(f"E*: {o.e_tot:.4g} J  t_tm: {o.t_tm:.4g} s  t_dt: {o.t_dt:.4g} s")
    print(f"rates (Mb/s): {', '.join(f'{r:.4g}' for r in report.schedule.rates)}")
    if report.status == "infeasible":
        print(f"infeasible; smallest feasible round count: {report.hint_min_rounds}")
        return EXIT_INFEASIBLE
    return EXIT_OK if report.status == "converged" else EXIT_ERROR


def cmd_compare(args):
    config = _load_config(args)
    scenario = config.scenario()
    cap = config.get("compare", "cap")
    xen_r_max = config.get("compare", "xen_r_max")
    if config.get("workload", "m0") is None:
        config.set("workload", "m0", presets.DEFAULT_M0)
    if config.get("workload", "dirty_rate") is None:
        # default operating point: dirty rate at a third of the enforced cap
        config.set("workload", "dirty_rate", 0.33 * (cap if cap else scenario.r_hat))
    workload = config.workload()
    rounds = config.get("compare", "xen_rounds", (6, 14, 25))
    q = config.get("partition", "q", 1)
    rows = compare_protocol(
        scenario, workload, rounds, q,
        stages=config.stages(), xen_r_max=xen_r_max, cap=cap,
        opts=config.solver_options(),
    )
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "compare.csv"),
                  _with_header(config, comparison_csv(rows)))
    _atomic_write(os.path.join(args.out, "compare.md"), comparison_markdown(rows))
    print(comparison_markdown(rows))
    return EXIT_OK if all(r.ok for r in rows) else EXIT_INFEASIBLE


def cmd_track(args):
    config = _load_config(args)
    profile = config.get("tracker", "profile")
    if profile:
        name, timeline = presets.tracking_profile(profile)
        config.set("scenario", "preset", config.get("scenario", "preset", name))
    else:
        name = config.get("scenario", "preset")
        if name is None:
            raise ConfigError("tracker.profile or scenario.preset required", key="profile")
        timeline = None
    scenario = config.scenario()
    if config.get("workload", "m0") is None:
        config.set("workload", "m0", presets.DEFAULT_M0)
    workload = config.workload()
    qos = config.qos()
    partition = (_partition_from(config)
                 if config.get("partition", "i_max") is not None
                 else presets.tracking_partition(name))
    tracker_config = TrackerConfig(
        a_max=config.get("tracker", "a_max", 0.5),
        horizon=config.get("tracker", "horizon", 90),
        settle_tolerance=config.get("tracker", "settle_tolerance", 0.01),
    )
    trace = run_tracker(scenario, workload, qos, config.stages(), partition,
                        timeline, tracker_config)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "track.csv"),
                  _with_header(config, trace.to_csv()))
    print(f"tracked {len(trace.n)} iterations; "
          f"E range [{trace.energy.min():.4g}, {trace.energy.max():.4g}] J; "
          f"feasible at {int(trace.feasible.sum())}/{len(trace.n)} iterations")
    return EXIT_OK


def _sweep_one(payload):
    scenario, preset, i_max_xen, q_rule = payload
    return workload_sweep(scenario, [preset], i_max_xen=i_max_xen, q_rule=q_rule)


def cmd_sweep(args):
    config = _load_config(args)
    name = config.get("scenario", "preset")
    if name is None:
        raise ConfigError("scenario.preset required for sweep", key="preset")
    scenario = config.scenario()
    m0 = config.get("workload", "m0", presets.DEFAULT_M0)
    config.set("workload", "m0", m0)
    workloads = presets.application_workloads(name, m0=m0)
    i_max_xen = config.get("sweep", "i_max_xen", 6)
    q_rule = config.get("partition", "q_rule", "full")
    jobs = config.get("run", "jobs", 1)
    if jobs > 1:
        payloads = [(scenario, p, i_max_xen, q_rule) for p in workloads]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cells = [c for part in pool.map(_sweep_one, payloads) for c in part]
    else:
        cells = workload_sweep(scenario, workloads, i_max_xen=i_max_xen, q_rule=q_rule)
    os.makedirs(args.out, exist_ok=True)
    _atomic_write(os.path.join(args.out, "sweep.csv"),
                  _with_header(config, sweep_csv(cells)))
    _atomic_write(os.path.join(args.out, "sweep_savings.md"), sweep_markdown(cells))
    print(sweep_markdown(cells))
    return EXIT_OK if all(c.ok for c in cells) else EXIT_INFEASIBLE


def cmd_oracle(args):
    config = _load_config(args)
    scenario = config.scenario()
    workload = config.workload()
    qos = config.qos()
    partition = _partition_from(config)
    if partition is None:
        raise ConfigError("partition.i_max required for oracle", key="i_max")
    grid_points = config.get("oracle", "grid_points", 200)
    schedule, energy = brute_force_oracle(
        scenario, workload, qos, config.stages(), partition, grid_points,
        config.solver_options().floor_frac,
    )
    os.makedirs(args.out, exist_ok=True)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["grid_points", "E_tot_J"] + [f"R_{i}" for i in partition.updated_indices])
    reduced = [schedule.rates[i] for i in partition.updated_indices]
    writer.writerow([grid_points, repr(energy)] + [repr(r) for r in reduced])
    _atomic_write(os.path.join(args.out, "oracle.csv"), _with_header(config, out.getvalue()))
    print(f"grid optimum: {energy:.6g} J at rates "
          f"{', '.join(f'{r:.4g}' for r in schedule.rates)}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="migsched",
        description="Energy-minimal bandwidth schedules for pre-copy VM live migration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI config file")
        p.add_argument("--preset", choices=("3g", "4g", "wifi"), help="scenario preset")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--seed", type=int, default=0, help="seed recorded in outputs")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers for sweeps")

    p = sub.add_parser("solve", help="solve one instance (or round-search)")
    common(p)
    p.add_argument("--i-max", dest="i_max", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--round-search", dest="round_search", action="store_true")
    p.add_argument("--q-rule", dest="q_rule")
    p.add_argument("--m0", type=float)
    p.add_argument("--w-bar", dest="w_bar", type=float)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="Xen/BMOP/TCBM protocol comparison")
    common(p)
    p.add_argument("--xen-rounds", dest="xen_rounds", type=lambda s: [int(t) for t in s.split(",")])
    p.add_argument("--q", type=int)
    p.add_argument("--xen-r-max", dest="xen_r_max", type=float)
    p.add_argument("--cap", type=float)
    p.add_argument("--m0", type=float)
    p.add_argument("--w-bar", dest="w_bar", type=float)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("track", help="online tracking run over a parameter timeline")
    common(p)
    p.add_argument("--profile", help="w-{3g,4g,wifi} or k0-{3g,4g,wifi}")
    p.add_argument("--a-max", dest="a_max", type=float)
    p.add_argument("--horizon", type=int)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("sweep", help="bzip2/mcf/memcached energy matrix")
    common(p)
    p.add_argument("--i-max-xen", dest="i_max_xen", type=int)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("oracle", help="brute-force grid search on one instance")
    common(p)
    p.add_argument("--i-max", dest="i_max", type=int)
    p.add_argument("--q", type=int)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--m0", type=float)
    p.add_argument("--w-bar", dest="w_bar", type=float)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleProblemError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, InvalidScheduleError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
