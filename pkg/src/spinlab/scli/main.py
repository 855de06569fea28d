"""Command-line entry point: ``spinlab run | validate | list-scenarios``."""
from __future__ import annotations

import argparse
import json
import sys

from ..errors import ConfigError, SpinLabError
from .config import FORMATS, SCENARIOS, load_config
from .runner import run_scenario

EXIT_OK = 0
EXIT_IO = 1
EXIT_CONFIG = 2
EXIT_FAILURE = 3


def _parser():
    p = argparse.ArgumentParser(prog="spinlab", description="Relativistic spin-kinematics scenario runner.")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario and write its table")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="output table path ('-' for stdout); overrides output.path")
    run.add_argument("--format", choices=FORMATS, help="overrides output.format")
    val = sub.add_parser("validate", help="parse and validate a config without running it")
    val.add_argument("--config", required=True)
    sub.add_parser("list-scenarios", help="list scenario tags")
    return p


def _load(path):
    try:
        return load_config(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror}", path) from exc


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list-scenarios":
        for name, desc in SCENARIOS.items():
            print(f"{name:28s} {desc}")
        return EXIT_OK
    try:
        cfg = _load(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print(f"ok: {cfg.scenario}")
        return EXIT_OK

    out = args.out if args.out is not None else cfg.output_path
    try:
        report = run_scenario(cfg, out, args.format)
    except SpinLabError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    stream = sys.stderr if out in (None, "-") else sys.stdout
    print(json.dumps(report.as_dict(), indent=1), file=stream)
    if not report.ok:
        failed = ", ".join(c.name for c in report.checks if not c.passed)
        print(f"validation failed: {failed}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK
