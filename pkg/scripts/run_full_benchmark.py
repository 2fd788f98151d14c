#!/usr/bin/env python3
"""Run the stock benchmark end to end: suite generation, bench, report.

Equivalent to:

    python scripts/make_benchmark_suite.py suite
    binsampler bench --plan suite/plan.json --out-dir results --workers 1

Expect roughly an hour of wall time single-worker: the 72 annealing and
hybrid cells each run up to their 45 s budget.  Pass --budget-seconds 5
for a quick smoke pass (annealer curves will be short).
"""

import argparse
import sys

from binsampler.bench import load_plan, run_benchmark, write_benchmark_suite


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--suite-dir", default="suite")
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--budget-seconds", type=float, default=45.0)
    args = parser.parse_args()

    plan_path = write_benchmark_suite(args.suite_dir, budget_seconds=args.budget_seconds)
    print(f"plan at {plan_path}; running benchmark (this can take a while)")
    rows = run_benchmark(load_plan(plan_path), args.out_dir, workers=args.workers)
    completed = sum(1 for r in rows if r["completed"] == "true")
    print(f"{completed}/{len(rows)} cells completed; results in {args.out_dir}")
    return 0 if completed else 3


if __name__ == "__main__":
    sys.exit(main())
