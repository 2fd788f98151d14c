"""Walk-then-anneal hybrid sampling with an efficiency-based switch.

The walk finds most configurations quickly and then stagnates: late in a
run almost every proposal is a duplicate.  The hybrid strategy watches
the discovery curve -- iteration number against distinct finds, in raw
counts -- and hands over to the annealer once the walk stops paying for
itself.  Efficiency is judged by a straight line through the origin
fitted to the curve: the walk is still considered efficient while the
fitted slope stays above ``slope_threshold`` OR the fit still tracks the
data (RMSD below ``rmsd_threshold``).  A plateauing curve fails both and
triggers the switch.  The first ``min_iterations`` iterations are always
walked, and a switch is one-way.

The annealer inherits every configuration the walk found: those masks
enter its penalty set from the first post-switch proposal, so it spends
its effort on the part of the space the walk could not finish.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .instance import Instance
from .sampling import SamplerState, SampleTrace, record_step, split_streams, walk_step


@dataclass(frozen=True)
class SwitchPolicy:
    """When may the hybrid abandon the walk?

    ``fit_window`` limits the fitted points to the most recent ones
    (absolute iteration numbers are kept as x values); ``None`` fits the
    full history.
    """

    min_iterations: int = 100
    slope_threshold: float = 0.25
    rmsd_threshold: float = 2.0
    fit_window: int | None = None

    def __post_init__(self):
        if not (isinstance(self.min_iterations, int) and self.min_iterations >= 1):
            raise ValueError("min_iterations must be an integer >= 1")
        if self.fit_window is not None and (
            not isinstance(self.fit_window, int) or self.fit_window < 2
        ):
            raise ValueError("fit_window must be an integer >= 2")


def policy_from_json(data: dict) -> SwitchPolicy:
    """Build a :class:`SwitchPolicy` from a JSON-style dict.

    All keys are optional; thresholds accept anything ``float()`` takes
    (including ``"inf"``, which disables the RMSD condition).
    """
    if not isinstance(data, dict):
        raise ValueError("switch policy must be a JSON object")
    allowed = {"min_iterations", "slope_threshold", "rmsd_threshold", "fit_window"}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ValueError(f"unknown switch policy key(s): {', '.join(unknown)}")
    kwargs = dict(data)
    for key in ("slope_threshold", "rmsd_threshold"):
        if key in kwargs:
            kwargs[key] = float(kwargs[key])
    return SwitchPolicy(**kwargs)


def fit_through_origin(points) -> float:
    """Least-squares slope of ``y = a*x``: ``a = sum(xy) / sum(x**2)``."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.size == 0:
        raise ValueError("cannot fit an empty point set")
    x, y = pts[:, 0], pts[:, 1]
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("cannot fit through the origin when all x are zero")
    return float(np.dot(x, y) / denom)


def rmsd(points, slope: float) -> float:
    """Root-mean-square deviation of the points from ``y = slope*x``."""
    pts = np.asarray(list(points), dtype=np.float64)
    if pts.size == 0:
        raise ValueError("cannot measure deviation of an empty point set")
    resid = pts[:, 1] - slope * pts[:, 0]
    return float(np.sqrt(np.mean(resid * resid)))


def should_switch(trace: SampleTrace, policy: SwitchPolicy) -> bool:
    """Decide whether the walk phase recorded in ``trace`` is exhausted.

    Always False before ``policy.min_iterations`` iterations.  Otherwise
    fits a line through the origin to (iteration, distinct_count) points
    over the policy's window; the walk stays efficient while
    ``slope > slope_threshold`` or ``rmsd < rmsd_threshold``.
    """
    k = len(trace)
    if k < policy.min_iterations:
        return False
    if policy.fit_window is None or policy.fit_window >= k:
        lo = 0
    else:
        lo = k - policy.fit_window
    x = np.arange(lo + 1, k + 1, dtype=np.float64)
    y = np.asarray(trace.distinct_counts[lo:], dtype=np.float64)
    denom = float(np.dot(x, x))
    slope = float(np.dot(x, y) / denom)
    resid = y - slope * x
    deviation = float(np.sqrt(np.mean(resid * resid)))
    still_efficient = slope > policy.slope_threshold or deviation < policy.rmsd_threshold
    return not still_efficient


def hybrid_run(
    inst: Instance,
    config,
    policy: SwitchPolicy,
    seed: int,
    max_iters: int,
    oracle_size: int,
    *,
    instance_id: str | None = None,
    budget_seconds: float | None = None,
    probe=None,
) -> SampleTrace:
    """Walk until :func:`should_switch` fires, then anneal to the end.

    The walk and the annealer draw from separate RNG streams derived from
    ``seed``, so the walk phase replays a pure walk run exactly and the
    switch point does not perturb the annealer's draws.  The trace's
    ``switch_iteration`` is the last walk iteration (``None`` when the
    run completed or hit its limits before any switch).
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if oracle_size < 1:
        raise ValueError("oracle_size must be at least 1")
    from .annealer import TrotterEvolver, anneal_sample, default_config

    if instance_id is None:
        from .instance import instance_digest

        instance_id = instance_digest(inst)
    if config is None:
        config = default_config(inst)

    walk_rng, anneal_rng = split_streams(seed)
    found: set[int] = set()
    walk_state = SamplerState(found=found, rng=walk_rng)
    anneal_state = SamplerState(found=found, rng=anneal_rng)
    trace = SampleTrace(strategy="hybrid", seed=seed, instance_id=instance_id,
                        oracle_size=oracle_size)
    evolver = None
    switched = False
    deadline = None if budget_seconds is None else time.monotonic() + budget_seconds
    for it in range(1, max_iters + 1):
        if not switched:
            candidate = walk_step(inst, walk_state)
            record_step(trace, walk_state, inst, candidate)
        else:
            candidate = anneal_sample(
                inst, config, anneal_state, evolver=evolver, probe=probe
            )
            record_step(trace, anneal_state, inst, candidate)
        if len(found) == oracle_size:
            trace.completed = True
            break
        if deadline is not None and time.monotonic() > deadline:
            break
        if not switched and should_switch(trace, policy):
            switched = True
            trace.switch_iteration = it
            evolver = TrotterEvolver(inst, config)
    return trace
