"""Benchmark orchestration: plans, cells, result files.

A plan names instances (JSON files), strategies, runs per instance and
the per-strategy iteration caps; a *cell* is one (instance, strategy,
run) triple.  Cells run independently -- optionally across worker
processes -- with seeds derived deterministically from the plan seed and
the cell's indices, so results do not depend on scheduling or worker
count.  Outputs land in one directory::

    traces/<id>__<strategy>__r<run>.csv (+ .meta.json sidecars)
    curves/<id>__<strategy>__r<run>.csv     normalized discovery curves
    fits.csv                                per-run model fits
    fit_means.csv                           mean fitted params per strategy
    bands/<strategy>.csv                    16/84 percentile band + mean
    summary.csv                             one row per cell
    run_meta.json                           timings (the only file whose
                                            bytes vary between runs)

Wall-clock budgets truncate individual runs (the trace's ``completed``
flag stays false and the event is noted in ``run_meta.json``); budgeted
plans therefore trade the byte-for-byte reproducibility of the trace
files for bounded runtime.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .annealer import _CONFIG_KEYS, config_from_json
from .curves import DEFAULT_GRID_POINTS, normalize_curves, percentile_band
from .fitting import fit_curve
from .hybrid import SwitchPolicy, policy_from_json
from .instance import (
    Instance,
    NormalWeights,
    UniformWeights,
    enumerate_feasible,
    generate_instance,
    load_instance,
    save_instance,
)
from .sampling import STRATEGIES, run_until_complete, save_trace

MODEL_BY_STRATEGY = {"random": "f1", "walk": "f2", "anneal": "f3", "hybrid": "f2"}

DEFAULT_MAX_ITERS = {"random": 400_000, "walk": 400_000, "anneal": 40_000, "hybrid": 400_000}

_PLAN_KEYS = (
    "instances",
    "strategies",
    "runs_per_instance",
    "base_seed",
    "seeds",
    "max_iters",
    "anneal",
    "switch",
    "budget_seconds",
    "fit_incomplete",
    "grid_points",
)


@dataclass
class BenchmarkPlan:
    instances: list[str]
    strategies: tuple[str, ...] = STRATEGIES
    runs_per_instance: int = 2
    base_seed: int = 9631
    seeds: list[int] | None = None
    max_iters: dict[str, int] = field(default_factory=lambda: dict(DEFAULT_MAX_ITERS))
    anneal: dict | None = None
    switch: dict | None = None
    budget_seconds: float | None = None
    fit_incomplete: bool = False
    grid_points: int = DEFAULT_GRID_POINTS

    def __post_init__(self):
        if not self.instances:
            raise ValueError("plan needs at least one instance")
        ids = [Path(p).stem for p in self.instances]
        if len(set(ids)) != len(ids):
            raise ValueError("instance file stems must be unique within a plan")
        self.strategies = tuple(self.strategies)
        unknown = [s for s in self.strategies if s not in STRATEGIES]
        if unknown or not self.strategies:
            raise ValueError(f"unknown strategies in plan: {unknown}")
        if self.runs_per_instance < 1:
            raise ValueError("runs_per_instance must be >= 1")
        if self.seeds is not None and len(self.seeds) != self.runs_per_instance:
            raise ValueError("seeds list must have runs_per_instance entries")
        bad_keys = sorted(set(self.max_iters) - set(STRATEGIES))
        if bad_keys:
            raise ValueError(f"max_iters names unknown strategies: {', '.join(bad_keys)}")
        for s in self.strategies:
            cap = self.max_iters.get(s, DEFAULT_MAX_ITERS[s])
            if not isinstance(cap, int) or cap < 1:
                raise ValueError(f"max_iters for {s} must be a positive integer")
            self.max_iters[s] = cap
        if self.budget_seconds is not None and not self.budget_seconds > 0:
            raise ValueError("budget_seconds must be positive when set")
        if self.grid_points < 2:
            raise ValueError("grid_points must be at least 2")
        # fail fast on malformed overrides
        if self.switch is not None:
            _switch_policy(self.switch)
        if self.anneal is not None:
            if not isinstance(self.anneal, dict):
                raise ValueError("anneal config must be a JSON object")
            unknown = sorted(set(self.anneal) - set(_CONFIG_KEYS))
            if unknown:
                raise ValueError(f"unknown anneal config key(s): {', '.join(unknown)}")

    def cell_seed(self, instance_index: int, strategy_index: int, run_index: int) -> int:
        if self.seeds is not None:
            return int(self.seeds[run_index])
        ss = np.random.SeedSequence(
            [int(self.base_seed), instance_index, strategy_index, run_index]
        )
        return int(ss.generate_state(1, dtype=np.uint64)[0])


def _switch_policy(raw: dict | None) -> SwitchPolicy:
    return SwitchPolicy() if raw is None else policy_from_json(raw)


def load_plan(path) -> BenchmarkPlan:
    """Read a plan file; instance paths resolve relative to the plan."""
    path = Path(path)
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed plan file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"plan file {path} must hold a JSON object")
    unknown = sorted(set(data) - set(_PLAN_KEYS))
    if unknown:
        raise ValueError(f"unknown plan key(s) in {path}: {', '.join(unknown)}")
    if "instances" not in data:
        raise ValueError(f"plan file {path} is missing 'instances'")
    kwargs = dict(data)
    kwargs["instances"] = [
        str((path.parent / p).resolve()) if not Path(p).is_absolute() else str(p)
        for p in data["instances"]
    ]
    if "max_iters" in kwargs and isinstance(kwargs["max_iters"], int):
        kwargs["max_iters"] = {s: kwargs["max_iters"] for s in STRATEGIES}
    if "budget_seconds" in kwargs and kwargs["budget_seconds"] is not None:
        kwargs["budget_seconds"] = float(kwargs["budget_seconds"])
    return BenchmarkPlan(**kwargs)


@dataclass
class CellResult:
    """What the parent needs back from one executed cell."""

    instance_id: str
    strategy: str
    run: int
    seed: int
    oracle_size: int
    completed: bool
    switch_iteration: int | None
    distinct_counts: np.ndarray
    wall_seconds: float
    budget_hit: bool

    def __len__(self) -> int:
        return int(self.distinct_counts.shape[0])


def _cell_name(instance_id: str, strategy: str, run: int) -> str:
    return f"{instance_id}__{strategy}__r{run}"


def _run_cell(payload: dict) -> CellResult:
    inst = load_instance(payload["instance_path"])
    oracle_size = len(enumerate_feasible(inst))
    policy = _switch_policy(payload["switch"])
    config = config_from_json(payload["anneal"] or {}, inst)
    started = time.monotonic()
    trace = run_until_complete(
        inst,
        payload["strategy"],
        payload["seed"],
        payload["max_iters"],
        oracle_size,
        instance_id=payload["instance_id"],
        anneal_config=config,
        switch_policy=policy,
        budget_seconds=payload["budget_seconds"],
    )
    wall = time.monotonic() - started
    save_trace(trace, payload["trace_path"])
    budget_hit = (
        payload["budget_seconds"] is not None
        and not trace.completed
        and len(trace) < payload["max_iters"]
    )
    return CellResult(
        instance_id=payload["instance_id"],
        strategy=payload["strategy"],
        run=payload["run"],
        seed=payload["seed"],
        oracle_size=oracle_size,
        completed=trace.completed,
        switch_iteration=trace.switch_iteration,
        distinct_counts=np.asarray(trace.distinct_counts, dtype=np.int64),
        wall_seconds=wall,
        budget_hit=budget_hit,
    )


def _write_curve_csv(path: Path, xs, ys) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,y\n")
        for x, y in zip(xs, ys):
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def run_benchmark(plan: BenchmarkPlan, out_dir, workers: int = 1) -> list[dict]:
    """Execute every cell of the plan and write the result bundle.

    Returns the summary rows (the content of ``summary.csv``).  With
    ``workers > 1`` cells are distributed over a process pool; outputs
    are identical to a single-worker run.
    """
    out = Path(out_dir)
    (out / "traces").mkdir(parents=True, exist_ok=True)
    (out / "curves").mkdir(exist_ok=True)
    (out / "bands").mkdir(exist_ok=True)
    started_stamp = datetime.now(timezone.utc).isoformat()
    t_start = time.monotonic()

    payloads = []
    for i_idx, inst_path in enumerate(plan.instances):
        instance_id = Path(inst_path).stem
        load_instance(inst_path)  # validate before losing the nice error context
        for s_idx, strategy in enumerate(plan.strategies):
            for r_idx in range(plan.runs_per_instance):
                run = r_idx + 1
                payloads.append(
                    {
                        "instance_path": str(inst_path),
                        "instance_id": instance_id,
                        "strategy": strategy,
                        "run": run,
                        "seed": plan.cell_seed(i_idx, s_idx, r_idx),
                        "max_iters": plan.max_iters.get(
                            strategy, DEFAULT_MAX_ITERS[strategy]
                        ),
                        "budget_seconds": plan.budget_seconds,
                        "anneal": plan.anneal,
                        "switch": plan.switch,
                        "trace_path": str(
                            out / "traces" / (_cell_name(instance_id, strategy, run) + ".csv")
                        ),
                    }
                )

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_cell, payloads, chunksize=1))
    else:
        results = [_run_cell(p) for p in payloads]

    by_instance: dict[str, list[CellResult]] = {}
    for res in results:
        by_instance.setdefault(res.instance_id, []).append(res)

    fits: dict[tuple[str, str, int], object] = {}
    curves_by_strategy: dict[str, list] = {s: [] for s in plan.strategies}
    skipped_instances = []
    for instance_id, cells in by_instance.items():
        try:
            curves = normalize_curves(cells)
        except ValueError:
            skipped_instances.append(instance_id)
            continue
        for cell, curve in zip(cells, curves):
            _write_curve_csv(
                out / "curves" / (_cell_name(instance_id, cell.strategy, cell.run) + ".csv"),
                curve.xs,
                curve.ys,
            )
            curves_by_strategy[cell.strategy].append(curve)
            if curve.completed or plan.fit_incomplete:
                model = MODEL_BY_STRATEGY[cell.strategy]
                fits[(instance_id, cell.strategy, cell.run)] = fit_curve(curve, model)

    fit_rows = []
    for (instance_id, strategy, run), res in sorted(fits.items()):
        fit_rows.append(
            {
                "instance_id": instance_id,
                "strategy": strategy,
                "run": run,
                "model": res.model,
                "params": ";".join(repr(p) for p in res.params),
                "rmsd": repr(res.rmsd),
                "converged": "true" if res.converged else "false",
            }
        )
    _write_csv(
        out / "fits.csv",
        ["instance_id", "strategy", "run", "model", "params", "rmsd", "converged"],
        fit_rows,
    )

    mean_rows = []
    for strategy in plan.strategies:
        strat_fits = [res for key, res in sorted(fits.items()) if key[1] == strategy]
        if not strat_fits:
            continue
        stacked = np.array([list(r.params) for r in strat_fits], dtype=np.float64)
        mean_rows.append(
            {
                "strategy": strategy,
                "model": MODEL_BY_STRATEGY[strategy],
                "n_fits": len(strat_fits),
                "param_means": ";".join(repr(float(m)) for m in stacked.mean(axis=0)),
            }
        )
    _write_csv(out / "fit_means.csv", ["strategy", "model", "n_fits", "param_means"], mean_rows)

    grid = np.linspace(0.0, 1.0, plan.grid_points)
    for strategy in plan.strategies:
        pool_curves = curves_by_strategy[strategy]
        if not pool_curves:
            continue
        band = percentile_band(pool_curves, grid)
        rows = [
            {
                "x": repr(float(x)),
                "p16": repr(float(lo)),
                "p84": repr(float(hi)),
                "mean": repr(float(mu)),
            }
            for x, lo, hi, mu in zip(band.grid, band.p16, band.p84, band.mean)
        ]
        _write_csv(out / "bands" / f"{strategy}.csv", ["x", "p16", "p84", "mean"], rows)

    summary_rows = []
    for res in sorted(results, key=lambda r: (r.instance_id, r.strategy, r.run)):
        fit = fits.get((res.instance_id, res.strategy, res.run))
        summary_rows.append(
            {
                "instance_id": res.instance_id,
                "strategy": res.strategy,
                "run": res.run,
                "completed": "true" if res.completed else "false",
                "iterations_to_complete": len(res) if res.completed else "",
                "oracle_size": res.oracle_size,
                "switch_iteration": "" if res.switch_iteration is None else res.switch_iteration,
                "fit_model": fit.model if fit else "",
                "fit_params": ";".join(repr(p) for p in fit.params) if fit else "",
                "fit_rmsd": repr(fit.rmsd) if fit else "",
            }
        )
    _write_csv(out / "summary.csv", _SUMMARY_COLUMNS, summary_rows)

    meta = {
        "started": started_stamp,
        "finished": datetime.now(timezone.utc).isoformat(),
        "wall_seconds": time.monotonic() - t_start,
        "workers": workers,
        "skipped_instances": sorted(skipped_instances),
        "cells": [
            {
                "cell": _cell_name(r.instance_id, r.strategy, r.run),
                "wall_seconds": r.wall_seconds,
                "iterations": len(r),
                "budget_hit": r.budget_hit,
            }
            for r in sorted(results, key=lambda r: (r.instance_id, r.strategy, r.run))
        ],
    }
    with open(out / "run_meta.json", "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary_rows


_SUMMARY_COLUMNS = [
    "instance_id",
    "strategy",
    "run",
    "completed",
    "iterations_to_complete",
    "oracle_size",
    "switch_iteration",
    "fit_model",
    "fit_params",
    "fit_rmsd",
]


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(str(row[c]) for c in columns) + "\n")


def report(in_dir) -> list[dict]:
    """Rebuild summary rows from the trace files of a result directory."""
    in_dir = Path(in_dir)
    trace_dir = in_dir / "traces"
    if not trace_dir.is_dir():
        raise ValueError(f"{in_dir} has no traces/ directory to report on")
    fits = {}
    fits_path = in_dir / "fits.csv"
    if fits_path.exists():
        with open(fits_path, "r", encoding="utf-8", newline="") as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                row = dict(zip(header, line.rstrip("\n").split(",")))
                fits[(row["instance_id"], row["strategy"], int(row["run"]))] = row
    rows = []
    for meta_path in sorted(trace_dir.glob("*.meta.json")):
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        csv_path = meta_path.with_name(meta_path.name.replace(".meta.json", ".csv"))
        iterations = 0
        with open(csv_path, "r", encoding="utf-8", newline="") as fh:
            fh.readline()
            for iterations, _ in enumerate(fh, start=1):
                pass
        name = csv_path.stem
        run = int(name.rsplit("__r", 1)[1])
        fit = fits.get((meta["instance_id"], meta["strategy"], run))
        rows.append(
            {
                "instance_id": meta["instance_id"],
                "strategy": meta["strategy"],
                "run": run,
                "completed": "true" if meta["completed"] else "false",
                "iterations_to_complete": iterations if meta["completed"] else "",
                "oracle_size": meta["oracle_size"],
                "switch_iteration": ""
                if meta["switch_iteration"] is None
                else meta["switch_iteration"],
                "fit_model": fit["model"] if fit else "",
                "fit_params": fit["params"] if fit else "",
                "fit_rmsd": fit["rmsd"] if fit else "",
            }
        )
    rows.sort(key=lambda r: (r["instance_id"], r["strategy"], r["run"]))
    return rows


def write_report(in_dir, out_path) -> None:
    _write_csv(Path(out_path), _SUMMARY_COLUMNS, report(in_dir))


# ---------------------------------------------------------------------------
# The stock 18-instance benchmark suite: 10 and 12 packages, capacity 100,
# a uniform/normal mix, fixed seeds.  Regenerate with
# scripts/make_benchmark_suite.py.

SUITE_CAPACITY = 100

SUITE_SPECS = tuple(
    [("n10-uniform-%c" % c, 10, UniformWeights(1, 100), 1101 + i) for i, c in enumerate("abcde")]
    + [("n10-normal-%c" % c, 10, NormalWeights(50.0, 20.0), 1201 + i) for i, c in enumerate("abcd")]
    + [("n12-uniform-%c" % c, 12, UniformWeights(1, 100), 1301 + i) for i, c in enumerate("abcde")]
    + [("n12-normal-%c" % c, 12, NormalWeights(50.0, 20.0), 1401 + i) for i, c in enumerate("abcd")]
)


def benchmark_instances() -> list[tuple[str, Instance]]:
    """The 18 stock instances as (id, instance) pairs."""
    return [
        (name, generate_instance(n, SUITE_CAPACITY, dist, seed))
        for name, n, dist, seed in SUITE_SPECS
    ]


def write_benchmark_suite(directory, budget_seconds: float | None = 45.0) -> Path:
    """Write the stock instances and a default plan file; returns the plan path."""
    directory = Path(directory)
    inst_dir = directory / "instances"
    inst_dir.mkdir(parents=True, exist_ok=True)
    rel_paths = []
    for name, inst in benchmark_instances():
        path = inst_dir / f"{name}.json"
        save_instance(inst, path)
        rel_paths.append(f"instances/{name}.json")
    plan = {
        "instances": rel_paths,
        "strategies": list(STRATEGIES),
        "runs_per_instance": 2,
        "base_seed": 9631,
        "max_iters": dict(DEFAULT_MAX_ITERS),
        "budget_seconds": budget_seconds,
        "fit_incomplete": True,
    }
    plan_path = directory / "plan.json"
    with open(plan_path, "w", encoding="utf-8") as fh:
        json.dump(plan, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return plan_path
