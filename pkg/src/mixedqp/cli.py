"""Command line entry point.

Every experiment is one subcommand reading one YAML config:

    mixedqp <experiment> --config cfg.yaml [--seed N] [--threads K]
                         [--out-dir DIR] [--no-plots]
    mixedqp validate --config cfg.yaml

Exit codes: 0 success, 1 domain error (a computation refused its inputs),
2 config error (schema violation or unreadable file).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import yaml

from .config import EXPERIMENT_KINDS, ConfigError, load_config
from .fiber import FiberError
from .measures import MeasureError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mixedqp",
        description="numerical laboratory for mixed random-quasiperiodic cocycles",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=None, help="override worker threads")
        p.add_argument("--out-dir", default=None, help="override the output directory")
        p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    for kind in EXPERIMENT_KINDS:
        add_common(sub.add_parser(kind, help=f"run a {kind} experiment"))

    validate = sub.add_parser("validate", help="check a config without computing")
    validate.add_argument("--config", required=True, help="experiment config (YAML)")
    return parser


def _load(args: argparse.Namespace):
    config = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
        config.resolved["seed"] = args.seed
    if getattr(args, "threads", None) is not None:
        if args.threads < 1:
            raise ConfigError("--threads", "thread count must be >= 1")
        config.threads = args.threads
        config.resolved["threads"] = args.threads
    if getattr(args, "out_dir", None) is not None:
        config.out_dir = Path(args.out_dir)
        config.resolved["out_dir"] = str(config.out_dir)
    if getattr(args, "no_plots", False):
        config.plots = False
        config.resolved["plots"] = False
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            config = load_config(args.config)
            print(f"config OK: {config.kind} experiment")
            print("resolved settings:")
            print(yaml.safe_dump(config.resolved, sort_keys=False).rstrip())
            return 0
        config = _load(args)
        if config.kind != args.command:
            raise ConfigError(
                "experiment",
                f"config declares {config.kind!r} but the {args.command!r} subcommand was invoked",
            )
        from .runner import run

        report = run(config)
        print(report.summary)
        print(f"outputs in {report.out_dir}")
        return 0
    except ConfigError as err:
        print(f"config error at {err.path}: {err.message}", file=sys.stderr)
        return 2
    except FileNotFoundError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (MeasureError, FiberError, ValueError, FloatingPointError, MemoryError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
