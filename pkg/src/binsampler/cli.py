"""Command-line entry points.

Exit codes: 0 on success, 2 on validation errors (bad arguments, bad
files), 3 on runtime failures (I/O, or a benchmark in which not a single
cell reached full coverage).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .annealer import TrotterEvolver, config_from_json, save_statevector_csv
from .bench import load_plan, run_benchmark, write_report
from .curves import NormalizedCurve, normalize_curves
from .fitting import fit_curve
from .hybrid import policy_from_json
from .instance import (
    enumerate_feasible,
    generate_instance,
    load_instance,
    parse_dist,
    save_feasible_csv,
    save_instance,
)
from .sampling import STRATEGIES, load_trace, run_until_complete, save_trace


def _load_json_object(path, what: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed {what} file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"{what} file {path} must hold a JSON object")
    return data


def _cmd_generate(args) -> int:
    dist = parse_dist(args.dist)
    inst = generate_instance(args.n, args.capacity, dist, args.seed)
    save_instance(inst, args.out)
    print(f"wrote instance n={inst.n} capacity={inst.capacity} -> {args.out}")
    return 0


def _cmd_enumerate(args) -> int:
    inst = load_instance(args.instance)
    feasible = enumerate_feasible(inst)
    save_feasible_csv(inst, feasible, args.out)
    print(f"{len(feasible)} feasible configurations -> {args.out}")
    return 0


def _build_policy(args):
    overrides = {} if args.switch_policy is None else _load_json_object(
        args.switch_policy, "switch policy"
    )
    for key in ("min_iterations", "slope_threshold", "rmsd_threshold", "fit_window"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    return policy_from_json(overrides)


def _found_before(trace, iteration: int) -> list[int]:
    """Distinct feasible masks discovered strictly before ``iteration``."""
    return sorted(
        {m for m, new in zip(trace.masks[: iteration - 1], trace.new_flags) if new}
    )


def _dump_state_files(dump_dir: Path, inst, config, trace) -> None:
    """Reconstruct and write the statevector of the last annealing step.

    The annealer is deterministic given its penalty set, so the state the
    final measurement sampled from can be rebuilt from the trace alone.
    """
    last = len(trace)
    if trace.strategy == "hybrid" and (
        trace.switch_iteration is None or trace.switch_iteration >= last
    ):
        print("no annealing step was taken; final-state dump skipped")
        return
    penalized = np.asarray(_found_before(trace, last), dtype=np.int64)
    evolver = TrotterEvolver(inst, config)
    psi = evolver.evolve_penalized(penalized)
    save_statevector_csv(psi, dump_dir / "final_state.csv")
    print(f"final statevector ({len(penalized)} penalized masks) -> "
          f"{dump_dir / 'final_state.csv'}")


def _cmd_sample(args) -> int:
    inst = load_instance(args.instance)
    oracle_size = len(enumerate_feasible(inst))
    config = None
    if args.anneal_config is not None:
        config = config_from_json(_load_json_object(args.anneal_config, "anneal config"), inst)
    policy = _build_policy(args)

    dump_dir = None
    probe = None
    if args.dump_state is not None:
        if args.strategy not in ("anneal", "hybrid"):
            raise ValueError("--dump-state applies to the anneal and hybrid strategies only")
        dump_dir = Path(args.dump_state)
        dump_dir.mkdir(parents=True, exist_ok=True)
        seen = []

        def probe(penalized, hamiltonian):
            if seen:
                return
            seen.append(True)
            with open(dump_dir / "first_anneal_penalized.csv", "w", encoding="utf-8",
                      newline="") as fh:
                fh.write("mask_hex\n")
                for mask in penalized:
                    fh.write(f"{int(mask):#x}\n")
            with open(dump_dir / "first_anneal_hamiltonian.csv", "w", encoding="utf-8",
                      newline="") as fh:
                fh.write("mask_hex,energy\n")
                for mask, energy in enumerate(hamiltonian.energies):
                    fh.write(f"{mask:#x},{float(energy)!r}\n")

    trace = run_until_complete(
        inst,
        args.strategy,
        args.seed,
        args.max_iters,
        oracle_size,
        instance_id=Path(args.instance).stem,
        anneal_config=config,
        switch_policy=policy,
        budget_seconds=args.budget_seconds,
        probe=probe,
    )
    save_trace(trace, args.out)
    status = "completed" if trace.completed else "incomplete"
    note = (
        ""
        if trace.switch_iteration is None
        else f", switched after iteration {trace.switch_iteration}"
    )
    print(
        f"{status}: {trace.distinct_found}/{oracle_size} distinct configurations "
        f"in {len(trace)} iterations{note} -> {args.out}"
    )
    if dump_dir is not None:
        if config is None:
            from .annealer import default_config

            config = default_config(inst)
        _dump_state_files(dump_dir, inst, config, trace)
    return 0


def _cmd_bench(args) -> int:
    if args.workers < 1:
        raise ValueError("--workers must be at least 1")
    plan = load_plan(args.plan)
    rows = run_benchmark(plan, args.out_dir, workers=args.workers)
    completed = sum(1 for r in rows if r["completed"] == "true")
    print(f"{completed}/{len(rows)} cells completed -> {args.out_dir}")
    if completed == 0:
        print("error: no cell reached full coverage within its limits", file=sys.stderr)
        return 3
    return 0


def _cmd_fit(args) -> int:
    trace = load_trace(args.trace)
    if trace.oracle_size is None:
        raise ValueError(f"trace {args.trace} carries no oracle size to normalize against")
    if len(trace) < 1:
        raise ValueError(f"trace {args.trace} is empty")
    if trace.completed:
        curve = normalize_curves([trace])[0]
    elif args.allow_incomplete:
        length = len(trace)
        xs = np.arange(length + 1, dtype=np.float64) / length
        ys = np.concatenate(
            [[0.0], np.asarray(trace.distinct_counts, dtype=np.float64) / trace.oracle_size]
        )
        curve = NormalizedCurve(xs=xs, ys=ys, completed=False)
    else:
        raise ValueError(
            f"trace {args.trace} did not reach full coverage; pass --allow-incomplete "
            "to fit it with x normalized by its own length"
        )
    model = "linear_origin" if args.model == "linear" else args.model
    result = fit_curve(curve, model)
    payload = {
        "model": result.model,
        "params": list(result.params),
        "rmsd": result.rmsd,
        "converged": result.converged,
    }
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    params = ", ".join(f"{p:.6g}" for p in result.params)
    print(f"{result.model}: params=({params}) rmsd={result.rmsd:.6g} -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    write_report(args.in_dir, args.out)
    print(f"summary -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="binsampler",
        description="Sample and benchmark the feasible single-container "
        "configurations of bin packing instances.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a random instance and save it as JSON")
    p.add_argument("--n", type=int, required=True, help="number of packages")
    p.add_argument("--capacity", type=int, required=True)
    p.add_argument("--dist", required=True, help="uniform:lo,hi or normal:mu,sigma")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="instance JSON path")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("enumerate", help="write the exact feasible set as CSV")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument("--out", required=True, help="oracle CSV path")
    p.set_defaults(func=_cmd_enumerate)

    p = sub.add_parser("sample", help="run one sampling strategy to full coverage")
    p.add_argument("--instance", required=True, help="instance JSON path")
    p.add_argument("--strategy", required=True, choices=STRATEGIES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-iters", type=int, required=True)
    p.add_argument("--out", required=True, help="trace CSV path (sidecar JSON added)")
    p.add_argument("--anneal-config", help="JSON file of annealer parameters")
    p.add_argument("--switch-policy", help="JSON file of hybrid switch parameters")
    p.add_argument("--min-iterations", type=int, dest="min_iterations",
                   help="override: earliest hybrid switch iteration")
    p.add_argument("--slope-threshold", type=float, dest="slope_threshold",
                   help="override: efficient-walk slope bound")
    p.add_argument("--rmsd-threshold", type=float, dest="rmsd_threshold",
                   help="override: efficient-walk deviation bound ('inf' disables)")
    p.add_argument("--fit-window", type=int, dest="fit_window",
                   help="override: fit only the last K iterations")
    p.add_argument("--budget-seconds", type=float,
                   help="wall-clock cap; the trace is truncated when it expires")
    p.add_argument("--dump-state",
                   help="directory for annealer debug dumps (first-step penalty "
                   "set and Hamiltonian, final statevector)")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("bench", help="execute a benchmark plan")
    p.add_argument("--plan", required=True, help="plan JSON path")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("fit", help="fit a discovery-curve model to a saved trace")
    p.add_argument("--trace", required=True, help="trace CSV path")
    p.add_argument("--model", required=True, choices=("f1", "f2", "f3", "linear"))
    p.add_argument("--out", required=True, help="fit result JSON path")
    p.add_argument("--allow-incomplete", action="store_true",
                   help="fit a truncated trace, normalizing x by its own length")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("report", help="regenerate summary.csv from a result directory")
    p.add_argument("--in-dir", required=True)
    p.add_argument("--out", required=True, help="summary CSV path")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
