"""Command-line experiment runner.

Commands::

    heavytail run <config> [--seed S] [--out DIR] [--jobs K] [--no-plots]
    heavytail list
    heavytail describe <kind>

Exit codes: 0 all checks passed; 1 usage or config-schema error;
2 at least one tolerance check failed; 3 a precision or efficiency
error was raised during simulation.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import KINDS, describe_kind, load_config
from .errors import ConfigError, EfficiencyError, HeavytailError, PrecisionError
from .experiments import run_experiment

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TOLERANCE = 2
EXIT_PRECISION = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heavytail",
        description="simulation experiments for heavy-tailed ID processes "
        "driven by null-recurrent chains",
    )
    sub = parser.add_subparsers(dest="command")

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="path to a key=value config file")
    run_p.add_argument("--seed", type=int, default=None, help="override the seed")
    run_p.add_argument("--out", default=None, help="output directory")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel workers")
    run_p.add_argument("--no-plots", action="store_true", help="skip SVG plots")

    sub.add_parser("list", help="list experiment kinds")

    desc_p = sub.add_parser("describe", help="describe one experiment kind")
    desc_p.add_argument("kind")
    return parser


def _cmd_run(args) -> int:
    try:
        cfg = load_config(args.config, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error in {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or os.path.splitext(os.path.basename(args.config))[0] + "-out"
    plots = (not args.no_plots) and cfg.get("plots", True)
    try:
        rows, passed = run_experiment(cfg, out_dir, jobs=args.jobs, plots=plots)
    except (PrecisionError, EfficiencyError) as exc:
        print(f"precision/efficiency failure: {exc}", file=sys.stderr)
        return EXIT_PRECISION
    except HeavytailError as exc:
        print(f"invalid experiment: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for r in rows:
        print(
            f"{r['status']:<5} {r['check']} [{r['params']}]: "
            f"value={r['value']:.6g} target={r['target']:.6g}"
        )
    print(f"results written to {out_dir}")
    return EXIT_OK if passed else EXIT_TOLERANCE


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "list":
        for kind in KINDS:
            print(kind)
        return EXIT_OK
    if args.command == "describe":
        try:
            print(describe_kind(args.kind))
        except ConfigError as exc:
            print(str(exc), file=sys.stderr)
            return EXIT_USAGE
        return EXIT_OK
    parser.print_help()
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
