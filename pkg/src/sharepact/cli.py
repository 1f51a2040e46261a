"""Command-line entry point: ``sharepact run|gas-sweep|verify-log``.

Exit codes: 0 success, 1 failed assertion / step / verification, 2 bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .errors import ChainInvalid, InvalidRange, ParseError
from .experiments import gas_sweep, parse_voters, sweep_csv
from .ledger import verify_log_file
from .scenario import bundled_scenarios, export_log, run_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _cmd_run(args: argparse.Namespace) -> int:
    try:
        run = run_scenario(args.scenario, seed=args.seed)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.report:
        Path(args.report).write_bytes(run.report_bytes())
    else:
        sys.stdout.write(run.report_bytes().decode())
    if args.log:
        export_log(run, args.log)
    for check in run.checks:
        if not check["ok"]:
            print(f"FAIL {check['check']}: expected {check['expected']!r}, got {check['actual']!r}", file=sys.stderr)
    if run.halted:
        print(f"halted: {run.halted}", file=sys.stderr)
    return run.exit_code


def _cmd_sweep(args: argparse.Namespace) -> int:
    try:
        rows = gas_sweep(args.kind, parse_voters(args.voters), args.reps, seed=args.seed)
    except InvalidRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    text = sweep_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_verify(args: argparse.Namespace) -> int:
    try:
        count = verify_log_file(args.file)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ChainInvalid as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_FAIL
    print(f"ok: {count} records")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sharepact", description="Data-sharing contract simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file or a bundled scenario by name")
    run.add_argument("scenario", help=f"path, or one of: {', '.join(sorted(bundled_scenarios()))}")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--report", help="write the JSON report here instead of stdout")
    run.add_argument("--log", help="export the hash-chained event log as JSONL")
    run.set_defaults(func=_cmd_run)

    sweep = sub.add_parser("gas-sweep", help="deployment gas and latency against panel size")
    sweep.add_argument("--kind", required=True, choices=["datashare", "congress"])
    sweep.add_argument("--voters", default="1..10", help="inclusive range A..B")
    sweep.add_argument("--reps", type=int, default=10)
    sweep.add_argument("--seed", type=int, default=0)
    sweep.add_argument("--csv", help="write CSV here instead of stdout")
    sweep.set_defaults(func=_cmd_sweep)

    verify = sub.add_parser("verify-log", help="check an exported JSONL event log")
    verify.add_argument("file")
    verify.set_defaults(func=_cmd_verify)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
