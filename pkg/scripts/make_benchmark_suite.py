#!/usr/bin/env python3
"""Materialize the stock 18-instance benchmark suite and its plan file.

Writes instances/*.json and plan.json under the target directory
(default: ./suite).  The instances are fixed by seed, so regenerating
the suite always produces the same files.
"""

import argparse

from binsampler.bench import write_benchmark_suite


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("directory", nargs="?", default="suite")
    parser.add_argument(
        "--budget-seconds",
        type=float,
        default=45.0,
        help="per-run wall-clock cap recorded in the plan (default 45)",
    )
    args = parser.parse_args()
    plan_path = write_benchmark_suite(args.directory, budget_seconds=args.budget_seconds)
    print(f"suite ready; plan at {plan_path}")


if __name__ == "__main__":
    main()
