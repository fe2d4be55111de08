"""Command-line front end: run experiment sweeps, validate scenarios, replay traces."""

from __future__ import annotations

import argparse
import os
import sys

from .channel import ConfigError
from .experiments import EXPERIMENTS, run_experiment
from .scenario import ScenarioIOError, load_scenario, validate_scenario
from .simulation import replay_trace

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2

SEED_BASE_ENV = "WBANSIM_SEED_BASE"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wbansim",
        description="Broadcast-strategy simulator for a 7-node on-body network")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment sweep and write CSV output")
    run.add_argument("scenario")
    run.add_argument("--experiment", required=True, choices=sorted(EXPERIMENTS),
                     help="experiment family to execute")
    run.add_argument("--out", required=True, help="output directory for CSV files")
    run.add_argument("--jobs", type=int, default=1,
                     help="worker processes for sweep points (default: serial)")
    run.add_argument("--seeds", type=int, default=None,
                     help="override the scenario's seed count")
    run.add_argument("--seed-base", type=int, default=None,
                     help=f"override the seed base (also via ${SEED_BASE_ENV})")
    run.add_argument("--verbose", action="store_true")

    val = sub.add_parser("validate", help="check a scenario file against all invariants")
    val.add_argument("scenario")

    rep = sub.add_parser("replay", help="dump the full event trace of a single run")
    rep.add_argument("scenario")
    rep.add_argument("--seed", type=int, required=True)
    rep.add_argument("--out", default=None, help="write the trace here instead of stdout")

    return parser


def _seed_base(args) -> int | None:
    if args.seed_base is not None:
        return args.seed_base
    env = os.environ.get(SEED_BASE_ENV)
    if env is not None:
        return int(env)
    return None


def cmd_run(args) -> int:
    problems = validate_scenario(args.scenario)
    if problems:
        for line in problems:
            print(f"invalid: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    scenario = load_scenario(args.scenario)
    paths = run_experiment(scenario, args.experiment, args.out, jobs=args.jobs,
                           seed_count=args.seeds, seed_base=_seed_base(args),
                           verbose=args.verbose)
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_validate(args) -> int:
    problems = validate_scenario(args.scenario)
    if problems:
        for line in problems:
            print(f"invalid: {line}")
        return EXIT_VALIDATION
    print("ok")
    return EXIT_OK


def cmd_replay(args) -> int:
    problems = validate_scenario(args.scenario)
    if problems:
        for line in problems:
            print(f"invalid: {line}", file=sys.stderr)
        return EXIT_VALIDATION
    scenario = load_scenario(args.scenario)
    cfg = scenario.run_config(seed=args.seed)
    lines = replay_trace(cfg)
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"run": cmd_run, "validate": cmd_validate, "replay": cmd_replay}
    try:
        return handlers[args.command](args)
    except ScenarioIOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ConfigError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:      # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
