"""Command-line entry point: ``python -m tripssqp {solve,bench,profile,summary}``.

Exit codes: 0 success, 2 configuration error, 3 dataset error, 4 sweep
finished but some runs failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys

import numpy as np

from .errors import ConfigError, DatasetError, RankError
from .harness import (EXPERIMENTS, ExperimentConfig, ResultTable, build_instances,
                      config_from_dict, default_budget_grid, load_config, performance_profile, profile_csv,
                      residual_summary, run_experiment, summary_csv)
from .solver import solve, solve_fully_stochastic

log = logging.getLogger("tripssqp")

EXIT_OK, EXIT_CONFIG, EXIT_DATASET, EXIT_FAILED_RUNS = 0, 2, 3, 4


def _experiment_config(path, **overrides):
    cfg = load_config(path) if path else ExperimentConfig()
    if overrides:
        data = {f.name: getattr(cfg, f.name) for f in dataclasses.fields(cfg)}
        data.update({k: v for k, v in overrides.items() if v is not None})
        cfg = config_from_dict(data)
    return cfg


def cmd_solve(args):
    experiment = "logistic" if args.problem == "logistic" else None
    cfg = _experiment_config(args.config, experiment=experiment)
    if args.problem != "logistic":
        cfg = config_from_dict({**{f.name: getattr(cfg, f.name)
                                   for f in dataclasses.fields(cfg)},
                                "problems": (args.problem,)})
    problem = build_instances(cfg)[0]
    algo, hess = cfg.methods[0]
    noise = cfg.noise(cfg.noise_levels[0], args.seed)
    if algo == "adaptive":
        _, trace = solve(problem, noise, cfg.solver_config(), cfg.oracle_config(), hessian=hess,
                         seed=args.seed)
    else:
        _, trace = solve_fully_stochastic(problem, noise, cfg.solver_config(), hessian=hess,
                                          seed=args.seed)
    if args.out:
        if args.out.endswith(".csv"):
            trace.to_csv(args.out)
        else:
            trace.to_json(args.out)
    print(f"{problem.name}: status={trace.status} iterations={trace.iterations} "
          f"rel_kkt={trace.final_rel_kkt:.3e} budget_used={trace.budget_used:g}")
    return EXIT_OK if trace.status in ("converged", "budget-exhausted") else EXIT_FAILED_RUNS


def cmd_bench(args):
    cfg = _experiment_config(args.config, experiment=args.experiment)
    outdir = args.out or cfg.output_dir
    if not outdir:
        raise ConfigError("no output directory; pass --out or set output_dir")
    os.makedirs(outdir, exist_ok=True)

    def progress(row):
        log.info("%s %s noise=%g seed=%d -> %s (%.2e)", row.problem, row.method, row.noise,
                 row.seed, row.status, row.final_rel_kkt)

    table = run_experiment(cfg, progress=progress)
    table.to_csv(os.path.join(outdir, "results.csv"))
    summary_csv(residual_summary(table), os.path.join(outdir, "summary.csv"))
    grid = default_budget_grid(table)
    for sigma2 in cfg.noise_levels:
        curves = performance_profile(table, grid, noise=sigma2)
        profile_csv(curves, grid, os.path.join(outdir, f"profile_noise{sigma2:g}.csv"))
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        json.dump(dataclasses.asdict(cfg), fh, indent=2)
    failed = table.failed
    print(f"{len(table)} runs, {sum(r.status == 'converged' for r in table)} converged, "
          f"{len(failed)} failed; results in {outdir}")
    return EXIT_FAILED_RUNS if failed else EXIT_OK


def cmd_profile(args):
    table = ResultTable.from_csv(args.inp)
    grid = (np.geomspace(args.min_budget, args.max_budget, args.points)
            if args.min_budget and args.max_budget else default_budget_grid(table, args.points))
    noise = args.noise
    if noise is None:
        levels = sorted({r.noise for r in table})
        noise = levels[0] if len(levels) == 1 else None
        if noise is None:
            raise ConfigError(f"table has several noise levels {levels}; pass --noise")
    profile_csv(performance_profile(table, grid, noise=noise), grid, args.out)
    return EXIT_OK


def cmd_summary(args):
    summary_csv(residual_summary(ResultTable.from_csv(args.inp)), args.out)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="tripssqp",
                                     description="Stochastic interior-point SQP experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one solve and write its trace")
    p.add_argument("--problem", required=True, help="analytic problem name or 'logistic'")
    p.add_argument("--config", help="YAML/JSON config document")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="trace file (.json or .csv)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run an experiment sweep")
    p.add_argument("--experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="YAML/JSON config document")
    p.add_argument("--out", help="output directory (default: output_dir from the config)")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="performance profile from a results table")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise", type=float)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--min-budget", type=float)
    p.add_argument("--max-budget", type=float)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("summary", help="residual box statistics from a results table")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_summary)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, RankError) as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
