#!/usr/bin/env python3
"""PyQuasiFix — fixed points of enriched contractions in quasi-normed spaces.

Runs the Krasnoselskij averaged iteration, quasi-norm axiom checks and
enriched-parameter estimation from JSON experiment configs.

Usage:
    python main.py run configs/example_3_3.json --out out/example_3_3
    python main.py run configs/example_3_3.json --out out/probe --jobs 4
    python main.py catalog
"""

import sys
import argparse
import logging

from core.errors import EXIT_CONFIG_ERROR


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="PyQuasiFix — Enriched Contraction Solver")
    parser.add_argument("--verbose", "-v", action="store_true",
                        help="Enable verbose logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run an experiment config")
    run.add_argument("config", type=str, help="Experiment config (JSON)")
    run.add_argument("--out", type=str, required=True,
                     help="Output directory for trace.csv / result.json / report.json")
    run.add_argument("--jobs", type=int, default=1,
                     help="Worker threads for the uniqueness probe (default: 1)")

    sub.add_parser("catalog", help="List built-in quasi-norms and maps")
    args = parser.parse_args(argv)

    level = logging.DEBUG if args.verbose else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%H:%M:%S",
        stream=sys.stderr,
    )

    if args.command == "catalog":
        return run_catalog()
    return run_config(args)


def run_catalog() -> int:
    from core.catalog import list_catalog
    print(list_catalog(), end="")
    return 0


def run_config(args) -> int:
    from core.experiment import run_experiment

    if args.jobs < 1:
        print("Error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        outcome = run_experiment(args.config, args.out, jobs=args.jobs)
    except OSError as e:
        logging.getLogger("main").error(f"Cannot write to {args.out}: {e}")
        return EXIT_CONFIG_ERROR
    print(outcome.summary)
    return outcome.exit_status


if __name__ == "__main__":
    sys.exit(main())
