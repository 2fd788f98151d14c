"""Bin packing instances and their feasible single-container configurations.

An instance is a list of ``n`` integer package weights together with an
integer container capacity ``C``.  A *feasible configuration* is any
non-empty subset of packages whose total weight does not exceed ``C``:
these are the building blocks from which complete packings are assembled,
and the object of interest throughout this package is the complete family
of them for a given instance.

Subsets are encoded as bitmasks.  Bit ``i`` of a mask is set iff package
``i`` belongs to the subset, so masks live in ``[0, 2**n)`` and the empty
set is mask ``0`` (never feasible by convention).  The family of feasible
masks is downward closed: dropping a package from a feasible subset can
only reduce its weight.  In particular every singleton ``{i}`` is feasible
because weights never exceed the capacity, so the family always contains
at least ``n`` members.

The number of packages is capped (default 24) so that the exact oracle --
a scan over all ``2**n`` masks -- and the statevector simulator built on
top of the same mask space stay tractable on a desk machine.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

#: Default ceiling on the number of packages.  2**24 masks is the largest
#: space the exact oracle is expected to sweep on a desk machine.
MAX_PACKAGES = 24


@dataclass(frozen=True)
class Instance:
    """A bin packing instance: integer weights and one container capacity.

    Build instances through :func:`new_instance` (or the loaders), which
    validate the invariants; the dataclass itself does not re-check them.
    """

    weights: tuple[int, ...]
    capacity: int

    @property
    def n(self) -> int:
        """Number of packages."""
        return len(self.weights)


@dataclass(frozen=True)
class FeasibleSet:
    """An ordered collection of feasible configuration masks.

    ``masks`` is strictly ascending.  ``source`` records whether the set
    came from the exact oracle (``"oracle"``) or was accumulated by a
    sampler (``"sampled"``).
    """

    masks: tuple[int, ...]
    source: str = "oracle"

    def __len__(self) -> int:
        return len(self.masks)


@dataclass(frozen=True)
class UniformWeights:
    """Weights drawn uniformly from the integer range ``[lo, hi]``."""

    lo: int
    hi: int


@dataclass(frozen=True)
class NormalWeights:
    """Weights drawn from a rounded normal, resampled into ``[1, capacity]``."""

    mu: float
    sigma: float


def new_instance(
    weights, capacity: int, *, max_packages: int = MAX_PACKAGES
) -> Instance:
    """Validate and build an :class:`Instance`.

    Parameters
    ----------
    weights:
        Iterable of package weights.  Every weight must be an integer in
        ``[1, capacity]``.
    capacity:
        Container capacity, a positive integer.
    max_packages:
        Ceiling on the number of packages (default :data:`MAX_PACKAGES`).

    Raises
    ------
    ValueError
        If any invariant is violated.  The message identifies the
        offending field or 1-based package index.
    """
    if isinstance(capacity, bool) or not isinstance(capacity, int):
        raise ValueError("capacity must be a positive integer")
    if capacity < 1:
        raise ValueError("capacity must be a positive integer")
    ws = tuple(weights)
    if len(ws) == 0:
        raise ValueError("instance needs at least one package")
    if len(ws) > max_packages:
        raise ValueError(
            f"instance has {len(ws)} packages; ceiling is {max_packages}"
        )
    for i, w in enumerate(ws, start=1):
        if isinstance(w, bool) or not isinstance(w, int):
            raise ValueError(f"package {i} weight must be an integer")
        if w < 1:
            raise ValueError(f"package {i} has non-positive weight")
        if w > capacity:
            raise ValueError(f"package {i} exceeds capacity")
    return Instance(weights=ws, capacity=capacity)


def subset_weight(inst: Instance, mask: int) -> int:
    """Total weight of the packages selected by ``mask``."""
    if mask < 0 or mask >= (1 << inst.n):
        raise ValueError(f"mask {mask} out of range for {inst.n} packages")
    total = 0
    m = mask
    while m:
        q = (m & -m).bit_length() - 1
        total += inst.weights[q]
        m &= m - 1
    return total


def is_feasible_partial(inst: Instance, mask: int) -> bool:
    """True iff ``mask`` is non-empty and its weight fits the capacity."""
    if mask == 0:
        return False
    return subset_weight(inst, mask) <= inst.capacity


def all_subset_weights(inst: Instance) -> np.ndarray:
    """Vector of subset weights for every mask in ``[0, 2**n)``.

    Entry ``m`` equals ``subset_weight(inst, m)``.  Used by the oracle and
    by the simulator when it builds diagonal Hamiltonians.
    """
    n = inst.n
    weights = np.zeros(1 << n, dtype=np.int64)
    for q in range(n):
        weights.reshape(-1, 2, 1 << q)[:, 1, :] += inst.weights[q]
    return weights


def enumerate_feasible(inst: Instance) -> FeasibleSet:
    """Exact oracle: every feasible configuration mask, ascending.

    Sweeps all ``2**n`` masks; requires ``n`` within the construction
    ceiling, which :func:`new_instance` already guarantees.
    """
    weights = all_subset_weights(inst)
    masks = np.nonzero(weights <= inst.capacity)[0]
    if len(masks) and masks[0] == 0:
        masks = masks[1:]
    return FeasibleSet(masks=tuple(int(m) for m in masks), source="oracle")


def generate_instance(
    n: int,
    capacity: int,
    dist: UniformWeights | NormalWeights,
    seed: int,
) -> Instance:
    """Draw a random instance; deterministic for fixed arguments.

    Weights come from a PCG64 generator seeded with ``seed``.  For
    :class:`UniformWeights` the bounds must satisfy
    ``1 <= lo <= hi <= capacity``.  For :class:`NormalWeights` each draw
    is rounded to the nearest integer and redrawn while it falls outside
    ``[1, capacity]``.
    """
    if n < 1:
        raise ValueError("instance needs at least one package")
    if capacity < 1:
        raise ValueError("capacity must be a positive integer")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    if isinstance(dist, UniformWeights):
        if dist.lo > dist.hi:
            raise ValueError(f"uniform bounds unsatisfiable: lo {dist.lo} > hi {dist.hi}")
        if dist.hi > capacity:
            raise ValueError(
                f"uniform bounds unsatisfiable: hi {dist.hi} > capacity {capacity}"
            )
        if dist.lo < 1:
            raise ValueError(f"uniform bounds unsatisfiable: lo {dist.lo} < 1")
        ws = rng.integers(dist.lo, dist.hi + 1, size=n)
    elif isinstance(dist, NormalWeights):
        if not np.isfinite(dist.mu) or not np.isfinite(dist.sigma) or dist.sigma < 0:
            raise ValueError("normal distribution needs finite mu and sigma >= 0")
        ws = np.rint(rng.normal(dist.mu, dist.sigma, size=n)).astype(np.int64)
        bad = (ws < 1) | (ws > capacity)
        while np.any(bad):
            ws[bad] = np.rint(rng.normal(dist.mu, dist.sigma, size=int(bad.sum()))).astype(
                np.int64
            )
            bad = (ws < 1) | (ws > capacity)
    else:
        raise ValueError(f"unknown weight distribution: {dist!r}")
    return new_instance((int(w) for w in ws), capacity)


def parse_dist(text: str) -> UniformWeights | NormalWeights:
    """Parse ``"uniform:lo,hi"`` or ``"normal:mu,sigma"``."""
    kind, _, args = text.partition(":")
    parts = args.split(",") if args else []
    try:
        if kind == "uniform" and len(parts) == 2:
            return UniformWeights(lo=int(parts[0]), hi=int(parts[1]))
        if kind == "normal" and len(parts) == 2:
            return NormalWeights(mu=float(parts[0]), sigma=float(parts[1]))
    except ValueError:
        pass
    raise ValueError(
        f"cannot parse distribution {text!r}; expected 'uniform:lo,hi' or 'normal:mu,sigma'"
    )


def save_instance(inst: Instance, path) -> None:
    """Write the instance as JSON: ``{"capacity": C, "weights": [...]}``."""
    data = {"capacity": inst.capacity, "weights": list(inst.weights)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_instance(path) -> Instance:
    """Read an instance written by :func:`save_instance`.

    The file must be a JSON object with exactly the keys ``capacity`` and
    ``weights``; unknown fields are rejected rather than ignored so that
    typos do not silently change an experiment.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed instance file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"instance file {path} must hold a JSON object")
    unknown = sorted(set(data) - {"capacity", "weights"})
    if unknown:
        raise ValueError(f"unknown field(s) in instance file {path}: {', '.join(unknown)}")
    for key in ("capacity", "weights"):
        if key not in data:
            raise ValueError(f"missing required field '{key}' in instance file {path}")
    if not isinstance(data["weights"], list):
        raise ValueError(f"field 'weights' in instance file {path} must be a list")
    return new_instance(data["weights"], data["capacity"])


def save_feasible_csv(inst: Instance, feasible: FeasibleSet, path) -> None:
    """Write ``mask_hex,weight`` rows, masks ascending in lowercase hex."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("mask_hex,weight\n")
        for mask in feasible.masks:
            fh.write(f"{mask:#x},{subset_weight(inst, mask)}\n")


def instance_digest(inst: Instance) -> str:
    """Short content hash, used as a default instance identifier."""
    blob = json.dumps(
        {"capacity": inst.capacity, "weights": list(inst.weights)}, sort_keys=True
    )
    return hashlib.sha1(blob.encode("ascii")).hexdigest()[:10]
