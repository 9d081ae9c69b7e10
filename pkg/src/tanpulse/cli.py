"""Command-line entry point: tanpulse <subcommand> --scenario <path> --out <dir>.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 numerical failure in the oracle integrator.
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    parse_scenario,
    run_kind,
    run_validate,
    write_dataset,
    write_report,
)
from .oracle import IntegrationError

_DATASET_COMMANDS = {
    "fields": "fields",
    "levels": "levels",
    "populations": "populations",
    "truncation": "truncation_scan",
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tanpulse",
        description="Tangent-pulse sweep datasets and validation runs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for command, kind in _DATASET_COMMANDS.items():
        p = sub.add_parser(command, help=f"write the {kind} CSV dataset and plot script")
        p.add_argument("--scenario", required=True, help="scenario file (key = value)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--tol", type=float, default=None,
                       help="override the scenario integrator tolerance")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    v = sub.add_parser("validate", help="run the analytic-vs-oracle validation suite")
    v.add_argument("--scenario", action="append", default=[],
                   help="scenario file; repeatable, zero scenarios = empty report")
    v.add_argument("--out", required=True, help="output directory")
    v.add_argument("--tol", type=float, default=None,
                   help="override the scenario integrator tolerance")
    v.add_argument("--jobs", type=int, default=1, help="parallel workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            scenarios = [parse_scenario(path) for path in args.scenario]
            for scenario in scenarios:
                if "validate" not in scenario.outputs:
                    raise ConfigError(
                        f"scenario {scenario.name!r} does not list output 'validate'"
                    )
            report = run_validate(scenarios, jobs=args.jobs, tol=args.tol)
            path = write_report(report, args.out)
            for line in report.summary_lines():
                print(line)
            print(f"report: {path} ({len(report.checks)} checks, "
                  f"{'pass' if report.passed else 'FAIL'})")
            return 0 if report.passed else 1
        kind = _DATASET_COMMANDS[args.command]
        scenario = parse_scenario(args.scenario)
        dataset = run_kind(scenario, kind, jobs=args.jobs, tol=args.tol)
        path = write_dataset(dataset, args.out)
        print(f"wrote {path}")
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except IntegrationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
