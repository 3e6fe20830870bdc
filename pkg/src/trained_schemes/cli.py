"""Command-line experiment runner.

    trained-schemes list
    trained-schemes run <id> [--seed N] [--out DIR] [--config FILE]
                            [--set key=value ...]

Exit codes: 0 success, 2 unknown experiment or bad configuration,
3 training/numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import experiments
from .errors import GradientFailureError, PositivityError, SolverFailureError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TRAINING = 3
EXIT_IO = 4


def _parse_set(items: list[str]) -> dict:
    overrides = {}
    for item in items:
        if "=" not in item:
            raise ValueError(f"--set expects key=value, got '{item}'")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trained-schemes",
                                     description="Reproduce the trained-scheme experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list experiment ids")
    runp = sub.add_parser("run", help="run one experiment")
    runp.add_argument("experiment", help="experiment id (see `list`)")
    runp.add_argument("--seed", type=int, default=None, help="override the default seed")
    runp.add_argument("--out", default="out", help="output directory")
    runp.add_argument("--config", default=None,
                      help="JSON file of key=value settings (flags win)")
    runp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                      help="override one config key")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        sys.stdout.write(experiments.list_experiments())
        return EXIT_OK

    if args.experiment not in experiments.EXPERIMENTS:
        sys.stderr.write(f"unknown experiment '{args.experiment}'; "
                         f"known ids:\n{experiments.list_experiments()}")
        return EXIT_CONFIG
    overrides = {}
    try:
        if args.config:
            overrides.update(json.loads(Path(args.config).read_text(encoding="utf-8")))
        overrides.update(_parse_set(args.set))
        # validate keys/types before doing any work
        experiments.apply_overrides(experiments.default_config(args.experiment), overrides)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    try:
        report = experiments.run(args.experiment, args.out, seed=args.seed,
                                 overrides=overrides)
    except (SolverFailureError, PositivityError, GradientFailureError,
            FloatingPointError) as exc:
        sys.stderr.write(f"training/numerical failure: {exc}\n")
        return EXIT_TRAINING
    except OSError as exc:
        sys.stderr.write(f"I/O failure: {exc}\n")
        return EXIT_IO
    for name, value in sorted(report.gains.items()):
        sys.stdout.write(f"gain {name}: {value:.4g}\n")
    for name, value in sorted(report.metrics.items()):
        sys.stdout.write(f"{name}: {value}\n")
    sys.stdout.write(f"artifacts written under {Path(args.out).resolve()}\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
