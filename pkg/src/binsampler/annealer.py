"""Digitized annealing on the subset-mask space, simulated exactly.

The sampler in this module prepares each proposal by evolving an
``n``-qubit statevector whose computational basis states are the subset
masks.  The problem Hamiltonian is diagonal, scoring each mask by its
total weight ``W``::

    E(mask) = alpha * (W - C) + beta * (W - C)**2

which is minimized at the target weight ``C - alpha / (2 * beta)``; the
recommended ``alpha = C * beta`` puts that target at half capacity.  A
transverse-field mixing Hamiltonian ``H0 = -h0_scale * sum_i sigma_x(i)``
supplies the off-diagonal dynamics.  Its ground state is the uniform
superposition, which is exactly the initial state, so the evolution
follows the textbook interpolation ``H(t) = (1-lam) * H0 + lam * H_P``
with a linear ramp ``lam = t / T``.

The propagator is digitized as a second-order (symmetric) product: for
``k = 1 .. n_trotter - 1`` apply a half step of mixing, a full diagonal
phase, and another half step of mixing, all at ``lam_k = k / n_trotter``
with ``dt = T / n_trotter``.  Because the sigma_x terms commute, one
mixing half step is the n-fold tensor power of a single-qubit rotation
``exp(i * theta * sigma_x)``; we apply it as two dense matrices acting on
the high and low halves of the qubit register, whose entries depend only
on the Hamming distance between row and column indices.  That keeps one
full evolution at a few thousand small BLAS calls, and the per-step
operators can be precomputed once per (instance, config) pair and reused
across the thousands of evolutions a sampling run performs.

Between proposals, every distinct feasible configuration measured so far
is penalized by adding ``gamma`` to its diagonal energy, pushing the
evolved state away from re-measuring known solutions.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, NamedTuple

import numpy as np

from .instance import Instance, all_subset_weights

#: Reduced Planck constant in eV*s, the unit system the defaults assume.
HBAR_EV_S = 6.58e-16

# Above these table sizes (entries per precomputed stack) the evolver
# falls back to per-step computation instead of caching.
_TABLE_MAX_ENTRIES = 4_000_000


@dataclass(frozen=True)
class AnnealConfig:
    """Parameters of one annealing setup.

    ``h0_scale`` fixes the transverse-field strength; see
    :func:`default_config` for the two stock profiles.  ``hbar`` only
    matters relative to ``anneal_time`` and the energy scale.
    """

    alpha: float
    beta: float
    gamma: float = 2.0
    anneal_time: float = 1e-14
    n_trotter: int = 500
    h0_scale: float = 1.0
    hbar: float = HBAR_EV_S

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValueError("alpha must be >= 0")
        if not self.beta > 0:
            raise ValueError("beta must be > 0")
        if not self.gamma > 0:
            raise ValueError("gamma must be > 0")
        if not self.anneal_time > 0:
            raise ValueError("anneal_time must be > 0")
        if not (isinstance(self.n_trotter, int) and self.n_trotter >= 1):
            raise ValueError("n_trotter must be an integer >= 1")
        if not self.h0_scale > 0:
            raise ValueError("h0_scale must be > 0")
        if not self.hbar > 0:
            raise ValueError("hbar must be > 0")


@dataclass(frozen=True)
class Schedule:
    """Interpolation schedule lam(u) on u in [0, 1].  Only linear ships."""

    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    def value(self, u: float) -> float:
        return float(u)


@dataclass(frozen=True)
class DiagonalHamiltonian:
    """Diagonal operator on the mask space: one energy per mask."""

    energies: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=np.float64)
        object.__setattr__(self, "energies", e)
        n = e.shape[0]
        if e.ndim != 1 or n == 0 or (n & (n - 1)) != 0:
            raise ValueError("energies must be a 1-D array of length 2**n")


def default_config(inst: Instance, profile: str = "strong", **overrides) -> AnnealConfig:
    """Stock configuration for an instance.

    ``beta`` is a fifth of the smallest weight and ``alpha = C * beta``,
    so the energy minimum sits at half capacity.  The ``"strong"``
    profile scales the transverse field so that the mixing Hamiltonian
    has spectral norm ``10**n`` (``h0_scale = 10**n / n``); the
    ``"moderate"`` profile uses ``h0_scale = 1``.  Keyword overrides
    replace any field afterwards.
    """
    if profile == "strong":
        h0_scale = 10.0**inst.n / inst.n
    elif profile == "moderate":
        h0_scale = 1.0
    else:
        raise ValueError(f"unknown profile {profile!r}; expected 'strong' or 'moderate'")
    beta = min(inst.weights) / 5.0
    config = AnnealConfig(alpha=inst.capacity * beta, beta=beta, h0_scale=h0_scale)
    if overrides:
        config = replace(config, **overrides)
    return config


_CONFIG_KEYS = ("alpha", "beta", "gamma", "anneal_time", "n_trotter", "h0_scale", "hbar")


def config_from_json(data: dict, inst: Instance) -> AnnealConfig:
    """Resolve a JSON config dict against an instance.

    All keys are optional and default to :func:`default_config` values.
    ``beta`` accepts the literal string ``"minw/5"`` and ``alpha`` the
    literal string ``"C*beta"`` (resolved against the final beta).
    """
    if not isinstance(data, dict):
        raise ValueError("anneal config must be a JSON object")
    unknown = sorted(set(data) - set(_CONFIG_KEYS))
    if unknown:
        raise ValueError(f"unknown anneal config key(s): {', '.join(unknown)}")
    base = default_config(inst)
    beta = data.get("beta", base.beta)
    if beta == "minw/5":
        beta = min(inst.weights) / 5.0
    elif isinstance(beta, str):
        raise ValueError(f"beta must be a number or the string 'minw/5', got {beta!r}")
    alpha = data.get("alpha", base.alpha)
    if alpha == "C*beta":
        alpha = inst.capacity * float(beta)
    elif isinstance(alpha, str):
        raise ValueError(f"alpha must be a number or the string 'C*beta', got {alpha!r}")
    fields = {
        "alpha": float(alpha),
        "beta": float(beta),
        "gamma": float(data.get("gamma", base.gamma)),
        "anneal_time": float(data.get("anneal_time", base.anneal_time)),
        "n_trotter": data.get("n_trotter", base.n_trotter),
        "h0_scale": float(data.get("h0_scale", base.h0_scale)),
        "hbar": float(data.get("hbar", base.hbar)),
    }
    if not isinstance(fields["n_trotter"], int) or isinstance(fields["n_trotter"], bool):
        raise ValueError("n_trotter must be an integer")
    return AnnealConfig(**fields)


def build_diagonal(inst: Instance, alpha: float, beta: float) -> DiagonalHamiltonian:
    """Problem Hamiltonian: ``E(mask) = alpha*(W-C) + beta*(W-C)**2``."""
    if not beta > 0:
        raise ValueError("beta must be > 0")
    if not alpha >= 0:
        raise ValueError("alpha must be >= 0")
    excess = all_subset_weights(inst).astype(np.float64) - float(inst.capacity)
    return DiagonalHamiltonian(energies=alpha * excess + beta * excess * excess)


def apply_penalties(
    h: DiagonalHamiltonian, measured, gamma: float
) -> DiagonalHamiltonian:
    """New Hamiltonian with ``gamma`` added on every measured mask."""
    if not gamma > 0:
        raise ValueError("gamma must be > 0")
    idx = sorted(set(int(m) for m in measured))
    size = h.energies.shape[0]
    if idx and (idx[0] < 0 or idx[-1] >= size):
        raise ValueError("measured mask out of range for this Hamiltonian")
    energies = h.energies.copy()
    if idx:
        energies[np.asarray(idx, dtype=np.int64)] += gamma
    return DiagonalHamiltonian(energies=energies)


def _xor_popcount_table(m: int) -> np.ndarray:
    """(2**m, 2**m) table of Hamming distances between row and column."""
    idx = np.arange(1 << m)
    xor = idx[:, None] ^ idx[None, :]
    pc = np.zeros_like(xor)
    for q in range(m):
        pc += (xor >> q) & 1
    return pc


def _rotation_power(theta: float, pc_table: np.ndarray, m: int) -> np.ndarray:
    """Dense matrix of ``exp(i*theta*sigma_x)`` tensored ``m`` times."""
    c, s = np.cos(theta), 1j * np.sin(theta)
    coef = np.array([c ** (m - d) * s**d for d in range(m + 1)])
    return coef[pc_table]


class TrotterEvolver:
    """Reusable digitized-evolution machinery for one (instance, config).

    Precomputes the per-step mixing operators and, for the sampling fast
    path, the diagonal phase rows of the unpenalized problem Hamiltonian.
    Tables beyond ``_TABLE_MAX_ENTRIES`` are not cached; the evolver then
    recomputes the per-step factors on the fly (same arithmetic).
    """

    def __init__(self, inst: Instance, config: AnnealConfig, schedule: Schedule | None = None):
        self.inst = inst
        self.config = config
        self.n = inst.n
        sched = schedule if schedule is not None else Schedule()
        n_t = config.n_trotter
        dt = config.anneal_time / n_t
        lambdas = np.array([sched.value(k / n_t) for k in range(1, n_t)])
        if lambdas.size:
            if np.any(lambdas < 0) or np.any(lambdas > 1) or np.any(np.diff(lambdas) < 0):
                raise ValueError("schedule must be non-decreasing within [0, 1]")
        self.lambdas = lambdas
        self.thetas = dt * (1.0 - lambdas) * config.h0_scale / (2.0 * config.hbar)
        # multiply by an energy to get the diagonal phase exponent per step
        self.phase_scale = -1j * dt * lambdas / config.hbar
        self.n_hi = self.n // 2
        self.n_lo = self.n - self.n_hi
        self._pc_hi = _xor_popcount_table(self.n_hi)
        self._pc_lo = _xor_popcount_table(self.n_lo)
        self._mix_hi = self._mix_lo = None
        if lambdas.size * (4**self.n_hi) <= _TABLE_MAX_ENTRIES:
            self._mix_hi = np.stack(
                [_rotation_power(t, self._pc_hi, self.n_hi) for t in self.thetas]
            ) if lambdas.size else np.empty((0, 1, 1), dtype=complex)
            self._mix_lo = np.stack(
                [_rotation_power(t, self._pc_lo, self.n_lo) for t in self.thetas]
            ) if lambdas.size else np.empty((0, 1, 1), dtype=complex)
        self.bare_energies = build_diagonal(inst, config.alpha, config.beta).energies
        self._bare_rows = None
        if lambdas.size * (1 << self.n) <= _TABLE_MAX_ENTRIES:
            self._bare_rows = np.exp(np.outer(self.phase_scale, self.bare_energies))
        self._penalty_row = np.exp(self.phase_scale * config.gamma)

    def _mixing(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if self._mix_hi is not None:
            return self._mix_hi[k], self._mix_lo[k]
        t = self.thetas[k]
        return (
            _rotation_power(t, self._pc_hi, self.n_hi),
            _rotation_power(t, self._pc_lo, self.n_lo),
        )

    def _half_mix(self, psi: np.ndarray, k: int) -> np.ndarray:
        m_hi, m_lo = self._mixing(k)
        mat = psi.reshape(1 << self.n_hi, 1 << self.n_lo)
        # both factors are symmetric, so right-multiplication needs no transpose
        return ((m_hi @ mat) @ m_lo).reshape(-1)

    def initial_state(self) -> np.ndarray:
        return np.full(1 << self.n, 2.0 ** (-self.n / 2.0), dtype=complex)

    def evolve(self, energies: np.ndarray) -> np.ndarray:
        """Evolve the uniform state under an arbitrary diagonal spectrum."""
        energies = np.asarray(energies, dtype=np.float64)
        if energies.shape != (1 << self.n,):
            raise ValueError(
                f"energies must have length {1 << self.n}, got {energies.shape}"
            )
        psi = self.initial_state()
        for k in range(self.lambdas.size):
            psi = self._half_mix(psi, k)
            psi = psi * np.exp(self.phase_scale[k] * energies)
            psi = self._half_mix(psi, k)
        return psi

    def evolve_penalized(self, penalized: np.ndarray) -> np.ndarray:
        """Fast path: bare spectrum plus ``gamma`` on the given masks.

        Identical in exact arithmetic to ``evolve(bare + gamma*indicator)``;
        the penalty enters as one scalar factor per step on the penalized
        amplitudes, which is what makes reuse across a run cheap.
        """
        penalized = np.asarray(penalized, dtype=np.int64)
        if penalized.size and (
            penalized.min() < 0 or penalized.max() >= (1 << self.n)
        ):
            raise ValueError("penalized mask out of range")
        psi = self.initial_state()
        for k in range(self.lambdas.size):
            psi = self._half_mix(psi, k)
            if self._bare_rows is not None:
                psi = psi * self._bare_rows[k]
            else:
                psi = psi * np.exp(self.phase_scale[k] * self.bare_energies)
            if penalized.size:
                psi[penalized] *= self._penalty_row[k]
            psi = self._half_mix(psi, k)
        return psi


def evolve(
    inst: Instance,
    config: AnnealConfig,
    h: DiagonalHamiltonian,
    schedule: Schedule | None = None,
) -> np.ndarray:
    """One digitized evolution of the uniform state under ``h``.

    Returns the final statevector; every factor is unitary, so its norm
    stays at 1 up to floating-point error.  With ``n_trotter == 1`` the
    product is empty and the uniform superposition comes back unchanged.
    """
    return TrotterEvolver(inst, config, schedule).evolve(h.energies)


def measure(psi: np.ndarray, rng: np.random.Generator) -> int:
    """Sample one mask from ``|psi|**2``.  Requires norm within 1e-6 of 1."""
    psi = np.asarray(psi)
    norm = float(np.linalg.norm(psi))
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"statevector norm {norm} is not within 1e-6 of 1")
    cdf = np.cumsum(np.abs(psi) ** 2)
    idx = int(np.searchsorted(cdf, rng.random(), side="right"))
    return min(idx, psi.shape[0] - 1)


def anneal_sample(
    inst: Instance,
    config: AnnealConfig,
    state,
    *,
    evolver: TrotterEvolver | None = None,
    probe: Callable | None = None,
) -> int:
    """One annealing proposal: penalize found states, evolve, measure.

    ``state`` is a :class:`binsampler.sampling.SamplerState`; its
    ``found`` set supplies the penalized masks and its ``rng`` the
    measurement draw.  ``evolver`` may carry precomputed tables for this
    (instance, config) pair; a fresh one is built when omitted.  ``probe``
    is called with ``(penalized, hamiltonian)`` before each evolution.
    """
    ev = evolver if evolver is not None else TrotterEvolver(inst, config)
    penalized = np.fromiter(sorted(state.found), dtype=np.int64, count=len(state.found))
    if probe is not None:
        bare = DiagonalHamiltonian(energies=ev.bare_energies.copy())
        h = apply_penalties(bare, penalized, config.gamma) if penalized.size else bare
        probe(penalized=penalized.copy(), hamiltonian=h)
    psi = ev.evolve_penalized(penalized)
    return measure(psi, state.rng)


def save_statevector_csv(psi: np.ndarray, path) -> None:
    """Debug dump: ``mask_hex,re,im`` rows for every amplitude."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("mask_hex,re,im\n")
        for mask, amp in enumerate(np.asarray(psi)):
            fh.write(f"{mask:#x},{float(amp.real)!r},{float(amp.imag)!r}\n")


class GapDiagnostic(NamedTuple):
    min_gap_sq: float
    max_drive: float
    adiabatic_ratio: float


def gap_diagnostic(inst: Instance, config: AnnealConfig, lambda_grid) -> GapDiagnostic:
    """Scan the interpolated Hamiltonian's low spectrum along the ramp.

    For each lam on the grid, diagonalizes the dense
    ``H(lam) = (1-lam) * H0 + lam * H_P`` and keeps the two lowest
    eigenpairs.  Returns the minimum squared gap, the largest transition
    matrix element ``|<psi0| (H_P - H0) |psi1>|`` and their ratio -- the
    figure of merit an adiabatic runtime must beat.  A degenerate ground
    space reports a zero gap (and an infinite ratio).

    Dense diagonalization caps this at 12 packages.
    """
    if inst.n > 12:
        raise ValueError("gap diagnostic is limited to instances with n <= 12")
    grid = [float(x) for x in lambda_grid]
    if not grid:
        raise ValueError("lambda grid must not be empty")
    if any(x < 0 or x > 1 for x in grid):
        raise ValueError("lambda grid values must lie in [0, 1]")
    from scipy.linalg import eigh

    size = 1 << inst.n
    h0 = np.zeros((size, size))
    idx = np.arange(size)
    for q in range(inst.n):
        h0[idx, idx ^ (1 << q)] = -config.h0_scale
    energies = build_diagonal(inst, config.alpha, config.beta).energies
    drive_op = -h0
    drive_op[idx, idx] = energies  # H_P - H0 (H0 has an empty diagonal)

    min_gap_sq = np.inf
    max_drive = 0.0
    for lam in grid:
        h = (1.0 - lam) * h0
        h[idx, idx] = lam * energies
        vals, vecs = eigh(h, subset_by_index=(0, 1))
        min_gap_sq = min(min_gap_sq, float(vals[1] - vals[0]) ** 2)
        elem = abs(float(vecs[:, 0] @ (drive_op @ vecs[:, 1])))
        max_drive = max(max_drive, elem)
    ratio = np.inf if min_gap_sq == 0.0 else max_drive / min_gap_sq
    return GapDiagnostic(min_gap_sq=min_gap_sq, max_drive=max_drive, adiabatic_ratio=ratio)
