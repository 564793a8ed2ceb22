"""Command line entry point for scenario-driven verification runs.

Exit status: 0 when no check reports FAIL (INCONCLUSIVE and degenerate
outcomes are listed but do not fail the run), 1 when at least one check
fails, 2 on scenario or usage errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ScenarioError
from .runner import run_suite
from .scenario import load_scenario


def build_parser():
    parser = argparse.ArgumentParser(
        prog="monotonelab",
        description=(
            "Run a scenario of theorem checks for set-valued monotone "
            "operators and write reports, convergence tables, and figures."
        ),
    )
    parser.add_argument(
        "--scenario",
        required=True,
        metavar="PATH",
        help="scenario JSON file (see fixtures/scenario.schema.json)",
    )
    parser.add_argument(
        "--out",
        metavar="DIR",
        help="output directory (default: the scenario's output_dir field)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        metavar="INT",
        help="override the scenario seed",
    )
    parser.add_argument(
        "--tol-scale",
        type=float,
        default=1.0,
        metavar="FLOAT",
        help="uniform tolerance multiplier for exploratory runs (default 1.0)",
    )
    parser.add_argument(
        "--exact",
        action="store_true",
        help="force exact polyhedral mode for representation/face checks (n <= 3)",
    )
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        metavar="INT",
        help="run up to INT checks concurrently (default 1)",
    )
    parser.add_argument(
        "--no-plots",
        action="store_true",
        help="skip figure rendering; write tables only",
    )
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.tol_scale <= 0.0:
        print("error: --tol-scale must be positive", file=sys.stderr)
        return 2
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 2
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.exact and scenario.space.n > 3:
        print(
            f"error: --exact requires n <= 3, scenario space has n={scenario.space.n}",
            file=sys.stderr,
        )
        return 2
    out = args.out if args.out is not None else scenario.output_dir
    if out is None:
        print(
            "error: no output directory: pass --out or set output_dir in the scenario",
            file=sys.stderr,
        )
        return 2
    try:
        return run_suite(
            scenario,
            out_dir=out,
            seed=args.seed,
            tol_scale=args.tol_scale,
            exact=args.exact,
            jobs=args.jobs,
            plots=not args.no_plots,
        )
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
