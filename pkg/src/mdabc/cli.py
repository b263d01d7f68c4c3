"""Command-line front end.

Exit codes: 0 on success, 2 on invalid input (bad config, unreadable or
malformed files, parameters outside the model's support), 1 on failures
while computing or writing results.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import bundled_config_path, load_config
from .distances import DistanceContext, DistanceKind, distance
from .exceptions import ConfigError, IoFailure, MDABCError
from .experiments import emit_report, run_experiment
from .fileio import load_dataset, save_dataset
from .models import MODEL_NAMES, ContaminationSpec, ModelSpec, generate_observed

log = logging.getLogger("mdabc")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    """Bad user input; maps to exit code 2."""


def _common_flags() -> argparse.ArgumentParser:
    # SUPPRESS keeps a flag given before the subcommand from being reset by the subparser
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: mdabc-out)")
    p.add_argument("--threads", type=int, default=argparse.SUPPRESS,
                   help="worker threads per sampler (default: available cores)")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help="only print results")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(prog="mdabc", parents=[common],
                                     description="Minimum-distance approximate Bayesian computation.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="run an experiment config")
    run.add_argument("config", help="path to a JSON config, or the name of a bundled one")
    run.add_argument("--n-replications", type=int, help="override the replication count")
    run.add_argument("--sim-budget", type=int, help="override the per-run simulation budget")
    run.add_argument("--workers", type=int, default=1, help="processes running replications in parallel")
    run.add_argument("--format", choices=("csv", "json"), default="csv")

    dist = sub.add_parser("distance", parents=[common], help="distance between two CSV datasets")
    dist.add_argument("method", choices=("hellinger", "cvm", "wasserstein"))
    dist.add_argument("file_y", help="observed data")
    dist.add_argument("file_z", help="simulated data")
    dist.add_argument("--p", type=float, default=1.0, help="Wasserstein order")
    dist.add_argument("--quantile-coupling", action="store_true",
                      help="allow Wasserstein between samples of different sizes")
    dist.add_argument("--bandwidth", type=float, help="Hellinger bandwidth (default: Silverman on y)")
    dist.add_argument("--grid-points", type=int, default=512, help="Hellinger grid size")

    sim = sub.add_parser("simulate", parents=[common], help="simulate a dataset from a model")
    sim.add_argument("model", choices=MODEL_NAMES)
    sim.add_argument("theta", type=float, nargs="+", help="parameters in the model's internal order")
    sim.add_argument("--n", type=int, required=True, help="number of observations")
    sim.add_argument("--file", default=None, help="file name inside --out (default: <model>.csv)")
    sim.add_argument("--burn-in", type=int, default=500, help="discarded SV steps")
    sim.add_argument("--alpha", type=float, default=0.0, help="contamination probability")
    sim.add_argument("--zeta", type=float, default=0.0, help="contamination location")
    sim.add_argument("--nu", type=float, default=0.01, help="contamination variance")

    sub.add_parser("version", parents=[common], help="print the version")
    return parser


def _out_dir(args) -> Path:
    return Path(getattr(args, "out", "mdabc-out"))


def _inside(base: Path, name: str) -> Path:
    target = (base / name).resolve()
    if base.resolve() not in target.parents:
        raise InputError(f"{name!r} would be written outside the output directory {base}")
    return target


def _default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def cmd_run(args) -> int:
    path = Path(args.config)
    if not path.exists():
        try:
            path = bundled_config_path(args.config)
        except ConfigError:
            raise InputError(f"config file not found: {args.config}") from None
    cfg = load_config(path)
    sampler = cfg.sampler.replace(n_threads=getattr(args, "threads", None) or _default_threads())
    if args.sim_budget is not None:
        sampler = sampler.replace(sim_budget=args.sim_budget)
    changes = {"sampler": sampler}
    if args.n_replications is not None:
        changes["n_replications"] = args.n_replications
    if getattr(args, "seed", None) is not None:
        changes["master_seed"] = args.seed
    cfg = cfg.replace(**changes)
    log.info("running %s: %d replication(s), %d method(s)", cfg.name or path.name, cfg.n_replications,
             len(cfg.methods))
    report = run_experiment(cfg, n_workers=args.workers)
    for p in emit_report(report, args.format, _out_dir(args)):
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_distance(args) -> int:
    try:
        y = load_dataset(args.file_y)
        z = load_dataset(args.file_z)
    except IoFailure as exc:
        raise InputError(str(exc)) from None
    kind = DistanceKind(args.method, args.p)
    ctx = DistanceContext.build(kind, y, bandwidth=args.bandwidth, num_points=args.grid_points,
                                quantile_coupling=args.quantile_coupling)
    print(format(distance(ctx, z), ".17g"))
    return EXIT_OK


def cmd_simulate(args) -> int:
    if args.n < 1:
        raise InputError("--n must be positive")
    contamination = ContaminationSpec(args.alpha, args.zeta, args.nu) if args.alpha > 0 else None
    spec = ModelSpec(args.model, args.n, None, contamination, args.burn_in if args.model == "sv" else 0)
    if len(args.theta) != spec.dim:
        raise InputError(f"{args.model} takes {spec.dim} parameters {spec.param_names}, got {len(args.theta)}")
    data = generate_observed(spec, np.array(args.theta), getattr(args, "seed", 0))
    out = _out_dir(args)
    out.mkdir(parents=True, exist_ok=True)
    target = save_dataset(data, _inside(out, args.file or f"{args.model}.csv"))
    x = data.values
    sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
    print(f"n={x.size} mean={x.mean():.6g} sd={sd:.6g} min={x.min():.6g} max={x.max():.6g}")
    log.info("wrote %s", target)
    return EXIT_OK


def cmd_version(args) -> int:
    print(__version__)
    return EXIT_OK


_COMMANDS = {"run": cmd_run, "distance": cmd_distance, "simulate": cmd_simulate, "version": cmd_version}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.WARNING if getattr(args, "quiet", False) else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return _COMMANDS[args.command](args)
    except (InputError, ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (MDABCError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

if __name__ == "__main__":
    sys.exit(main())
