"""Sampling strategies and run traces.

Two elementary proposal mechanisms live here: blind uniform draws over the
whole mask space, and a biased random walk that grows a subset package by
package and therefore only ever proposes feasible configurations.  The
annealing and hybrid strategies are dispatched from :func:`run_until_complete`
but implemented in their own modules.

Every strategy shares the same bookkeeping: a :class:`SampleTrace` records,
per iteration, the proposed mask, whether it was a new feasible discovery,
and the running number of distinct discoveries.  Iterations count proposals,
so duplicates and infeasible proposals still advance the clock -- that is
exactly the cost model the benchmark compares strategies under.

Randomness: each run derives two independent PCG64 streams from its seed
(``numpy.random.SeedSequence(seed).spawn(2)``).  Stream 0 drives the walk
and the uniform sampler, stream 1 drives annealer measurements.  Keeping
the streams fixed per role means a hybrid run replays the pure walk's
proposals exactly up to its switch point.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from pathlib import Path

import numpy as np

from .instance import Instance, is_feasible_partial

STRATEGIES = ("random", "walk", "anneal", "hybrid")


@dataclass
class SamplerState:
    """Mutable state shared by the step functions: discoveries plus RNG."""

    found: set[int]
    rng: np.random.Generator


@dataclass
class SampleTrace:
    """Per-iteration record of one sampling run.

    Entries are stored as parallel lists; iteration numbers are implicit
    and 1-based (entry ``i`` of the lists belongs to iteration ``i + 1``).
    ``switch_iteration`` is the last walk iteration of a hybrid run, or
    ``None`` if no switch happened.
    """

    strategy: str
    seed: int
    instance_id: str
    oracle_size: int | None = None
    switch_iteration: int | None = None
    completed: bool = False
    masks: list[int] = field(default_factory=list)
    new_flags: list[bool] = field(default_factory=list)
    distinct_counts: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.masks)

    @property
    def distinct_found(self) -> int:
        return self.distinct_counts[-1] if self.distinct_counts else 0

    def entries(self):
        """Yield ``(iteration, mask, is_new, distinct_count)`` tuples."""
        for i, (m, f, d) in enumerate(
            zip(self.masks, self.new_flags, self.distinct_counts), start=1
        ):
            yield i, m, f, d


def split_streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Derive the (walk/uniform, annealer-measurement) streams for a run."""
    children = np.random.SeedSequence(seed).spawn(2)
    return (
        np.random.Generator(np.random.PCG64(children[0])),
        np.random.Generator(np.random.PCG64(children[1])),
    )


def random_step(inst: Instance, state: SamplerState) -> int:
    """Propose a mask drawn uniformly from ``[0, 2**n)``."""
    return int(state.rng.integers(1 << inst.n))


def walk_step(inst: Instance, state: SamplerState) -> int:
    """Grow one feasible configuration by a stochastic greedy walk.

    The walk picks a first package uniformly among all ``n``, then
    repeatedly: discards from the eligible pool every package that would
    overflow the capacity, stops with probability ``1/(len(pool)+1)``
    (strict ``<`` on a uniform draw), and otherwise moves one uniformly
    chosen eligible package into the subset.  It terminates when the pool
    empties or the stop draw fires, so the proposal is always feasible --
    but the sampling is biased, and duplicate proposals grow common once
    most configurations have been seen.
    """
    rng = state.rng
    weights = inst.weights
    capacity = inst.capacity
    n = inst.n
    first = int(rng.integers(n))
    mask = 1 << first
    weight = weights[first]
    left = [i for i in range(n) if i != first]
    while left:
        left = [i for i in left if weight + weights[i] <= capacity]
        if rng.random() < 1.0 / (len(left) + 1):
            break
        j = int(rng.integers(len(left)))
        pick = left.pop(j)
        mask |= 1 << pick
        weight += weights[pick]
    return mask


def record_step(
    trace: SampleTrace, state: SamplerState, inst: Instance, candidate: int
) -> bool:
    """Append ``candidate`` to the trace; returns whether it was a new find.

    A candidate is new iff it is feasible and not yet in ``state.found``.
    """
    is_new = is_feasible_partial(inst, candidate) and candidate not in state.found
    if is_new:
        state.found.add(candidate)
    trace.masks.append(candidate)
    trace.new_flags.append(is_new)
    trace.distinct_counts.append(len(state.found))
    return is_new


def run_until_complete(
    inst: Instance,
    strategy: str,
    seed: int,
    max_iters: int,
    oracle_size: int,
    *,
    instance_id: str | None = None,
    anneal_config=None,
    switch_policy=None,
    budget_seconds: float | None = None,
    probe=None,
) -> SampleTrace:
    """Run one strategy until full coverage, ``max_iters``, or the budget.

    ``oracle_size`` is the target number of distinct feasible
    configurations (from :func:`binsampler.instance.enumerate_feasible`).
    Truncation at ``max_iters`` or at the wall-clock budget is a valid
    outcome and leaves ``completed`` False on the returned trace.

    ``anneal_config`` (for ``anneal``/``hybrid``) and ``switch_policy``
    (for ``hybrid``) fall back to the documented defaults when omitted.
    ``probe``, if given, is invoked by every annealer call with the
    penalized Hamiltonian it is about to evolve.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if oracle_size < 1:
        raise ValueError("oracle_size must be at least 1")

    if instance_id is None:
        from .instance import instance_digest

        instance_id = instance_digest(inst)

    if strategy == "hybrid":
        from .hybrid import SwitchPolicy, hybrid_run

        return hybrid_run(
            inst,
            anneal_config,
            switch_policy if switch_policy is not None else SwitchPolicy(),
            seed,
            max_iters,
            oracle_size,
            instance_id=instance_id,
            budget_seconds=budget_seconds,
            probe=probe,
        )

    walk_rng, anneal_rng = split_streams(seed)
    trace = SampleTrace(strategy=strategy, seed=seed, instance_id=instance_id,
                        oracle_size=oracle_size)

    if strategy == "anneal":
        from .annealer import TrotterEvolver, anneal_sample, default_config

        config = anneal_config if anneal_config is not None else default_config(inst)
        evolver = TrotterEvolver(inst, config)
        state = SamplerState(found=set(), rng=anneal_rng)

        def step():
            return anneal_sample(inst, config, state, evolver=evolver, probe=probe)

    else:
        state = SamplerState(found=set(), rng=walk_rng)
        step_fn = random_step if strategy == "random" else walk_step

        def step():
            return step_fn(inst, state)

    deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
    for _ in range(max_iters):
        candidate = step()
        record_step(trace, state, inst, candidate)
        if len(state.found) == oracle_size:
            trace.completed = True
            break
        if deadline is not None and time.monotonic() > deadline:
            break
    return trace


def prob_new_random(n: int, feasible_size: int, b: int) -> Fraction:
    """Exact probability that a uniform draw is a new feasible find.

    With ``feasible_size`` feasible configurations in a space of ``2**n``
    masks and ``b`` of them already found, a uniform proposal is a new
    discovery with probability ``(feasible_size - b) / 2**n``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 0 <= feasible_size <= (1 << n):
        raise ValueError(f"feasible_size {feasible_size} out of range for n={n}")
    if b < 0:
        raise ValueError("b must be non-negative")
    if b > feasible_size:
        raise ValueError(f"cannot have found {b} of {feasible_size} configurations")
    return Fraction(feasible_size - b, 1 << n)


def prob_complete_bound(n: int, feasible_size: int, max_iters: int) -> Fraction:
    """Lower bound on full-coverage probability for uniform sampling.

    For ``M = max_iters`` at least ``feasible_size``, the chance that
    ``M`` uniform draws cover all ``F = feasible_size`` configurations is
    at least ``(2**n - F)**(M - F) * F! / 2**(n*M)``: one way to succeed
    is to hit the missing configurations in some order on ``F`` marked
    draws and anything already-seen or infeasible on the rest.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if not 1 <= feasible_size <= (1 << n):
        raise ValueError(f"feasible_size {feasible_size} out of range for n={n}")
    if max_iters < feasible_size:
        raise ValueError(
            f"max_iters {max_iters} cannot cover {feasible_size} configurations"
        )
    space = 1 << n
    numerator = (space - feasible_size) ** (max_iters - feasible_size) * factorial(
        feasible_size
    )
    return Fraction(numerator, space**max_iters)


def _sidecar_path(csv_path: Path) -> Path:
    return csv_path.with_name(csv_path.stem + ".meta.json")


def save_trace(trace: SampleTrace, csv_path) -> None:
    """Write a trace as CSV plus a JSON metadata sidecar.

    The CSV holds ``iteration,candidate_mask_hex,is_new,distinct_count``
    rows; the sidecar ``<stem>.meta.json`` carries strategy, seed,
    instance id, switch iteration, completion flag and oracle size.
    """
    csv_path = Path(csv_path)
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        fh.write("iteration,candidate_mask_hex,is_new,distinct_count\n")
        for i, mask, is_new, distinct in trace.entries():
            flag = "true" if is_new else "false"
            fh.write(f"{i},{mask:#x},{flag},{distinct}\n")
    meta = {
        "strategy": trace.strategy,
        "seed": trace.seed,
        "instance_id": trace.instance_id,
        "switch_iteration": trace.switch_iteration,
        "completed": trace.completed,
        "oracle_size": trace.oracle_size,
    }
    with open(_sidecar_path(csv_path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_trace(csv_path) -> SampleTrace:
    """Read back a trace written by :func:`save_trace`."""
    csv_path = Path(csv_path)
    if not csv_path.exists():
        # a plainly absent trace is an I/O problem, not a format problem
        raise FileNotFoundError(f"no trace file {csv_path}")
    meta_path = _sidecar_path(csv_path)
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError as exc:
        raise ValueError(f"missing trace sidecar {meta_path}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"malformed trace sidecar {meta_path}: {exc}") from exc
    trace = SampleTrace(
        strategy=meta["strategy"],
        seed=meta["seed"],
        instance_id=meta["instance_id"],
        oracle_size=meta["oracle_size"],
        switch_iteration=meta["switch_iteration"],
        completed=meta["completed"],
    )
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        header = fh.readline().strip()
        if header != "iteration,candidate_mask_hex,is_new,distinct_count":
            raise ValueError(f"unexpected trace header in {csv_path}: {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                it, mask_hex, flag, distinct = line.split(",")
                iteration = int(it)
                mask = int(mask_hex, 16)
                if flag not in ("true", "false"):
                    raise ValueError(flag)
                count = int(distinct)
            except ValueError as exc:
                raise ValueError(
                    f"malformed trace row at {csv_path}:{lineno}: {line!r}"
                ) from exc
            if iteration != len(trace.masks) + 1:
                raise ValueError(
                    f"non-contiguous iteration numbers at {csv_path}:{lineno}"
                )
            trace.masks.append(mask)
            trace.new_flags.append(flag == "true")
            trace.distinct_counts.append(count)
    return trace
