"""Branch-structured states and the spin-bath model that generates them.

A decohered system-plus-environment state is a sum of product branches

    sum_k  psi_k |s_k> |e_k(1)> |e_k(2)> ... |e_k(N)>

labelled by mutually orthogonal pointer states |s_k> of the system, with
one single-qubit ket |e_k(j)> per environment qubit and branch. Storing
the per-qubit kets instead of the expanded branch tensors is what makes
N >= 50 environments exact and cheap: every reduced quantity downstream
needs only the pairwise per-qubit overlaps <e_k(j)|e_k'(j)>, so the cost
is O(n_branches^2 * N) rather than O(2^N).

The generating dynamics is a spin-1/2 system coupled to N environment
qubits through

    H = sum_k g_k sigma_z(S) (x) sigma_y(E_k)

with the environment starting in |0...0>. The terms commute, so the
evolution factorizes exactly: the sigma_z = +1/-1 branch rotates
environment qubit j by exp(-/+ i g_j t sigma_y). Coupling constants are
drawn uniformly from (0, 1]; the distribution is an assumption of this
module (only the interval is physically pinned down) and everything
downstream takes the sampled values as given.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import reduce
from typing import Sequence

import numpy as np

from .dense import (
    MAX_DENSE_SUBSYSTEMS,
    GuardError,
    PureState,
    SubsystemsLike,
    _as_indices,
    _entropy_bits,
)

NORM_TOL = 1e-12


@dataclass(frozen=True)
class CouplingSet:
    """System-environment coupling constants plus an evolution time.

    The dimensionless action ``a = t * mean(g)`` is the natural strength
    axis for this model; ``at_action`` converts back to a time.
    """

    g: np.ndarray
    t: float = 0.0

    def __post_init__(self) -> None:
        g = np.asarray(self.g, dtype=float).ravel().copy()
        if g.size == 0:
            raise ValueError("need at least one coupling")
        if g.min() <= 0.0 or g.max() > 1.0:
            raise ValueError("couplings must lie in (0, 1]")
        g.setflags(write=False)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "t", float(self.t))

    @property
    def n_env(self) -> int:
        return self.g.size

    @property
    def action(self) -> float:
        return self.t * float(np.mean(self.g))

    def at_time(self, t: float) -> "CouplingSet":
        return replace(self, t=float(t))

    def at_action(self, a: float) -> "CouplingSet":
        """Same couplings at the time giving mean interaction action ``a``."""
        return replace(self, t=float(a) / float(np.mean(self.g)))


@dataclass(frozen=True)
class Observable:
    """Single-qubit observable cos(mu) sigma_z + sin(mu) sigma_x.

    ``mu`` is the angle between its eigenbasis and the pointer basis;
    mu = 0 is the pointer observable itself.
    """

    mu: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.mu <= np.pi / 2:
            raise ValueError(f"mu must lie in [0, pi/2], got {self.mu}")
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.mu), np.sin(self.mu)
        return np.array([[c, s], [s, -c]], dtype=complex)

    @property
    def eigenkets(self) -> np.ndarray:
        """Rows are the +1 and -1 eigenvectors, in that order."""
        c, s = np.cos(self.mu / 2), np.sin(self.mu / 2)
        return np.array([[c, s], [-s, c]], dtype=complex)


@dataclass(frozen=True)
class BranchState:
    """Sum of product branches; see the module docstring for the layout.

    ``amplitudes``    shape (n,)        branch amplitudes, sum |psi_k|^2 = 1
    ``system_states`` shape (n, d_s)    orthonormal pointer kets
    ``env_states``    shape (n, N, 2)   normalized per-qubit environment kets
    """

    amplitudes: np.ndarray
    system_states: np.ndarray
    env_states: np.ndarray

    def __post_init__(self) -> None:
        psi = np.asarray(self.amplitudes, dtype=complex).ravel().copy()
        sys_kets = np.asarray(self.system_states, dtype=complex).copy()
        env = np.asarray(self.env_states, dtype=complex).copy()
        n = psi.size
        if sys_kets.ndim != 2 or sys_kets.shape[0] != n:
            raise ValueError("system_states must be an (n_branches, d_system) array")
        if env.ndim != 3 or env.shape[0] != n or env.shape[2] != 2:
            raise ValueError("env_states must be an (n_branches, n_env, 2) array")
        if abs(np.sum(np.abs(psi) ** 2) - 1.0) > NORM_TOL:
            raise ValueError("branch amplitudes must satisfy sum |psi_k|^2 = 1")
        gram = sys_kets.conj() @ sys_kets.T
        if np.max(np.abs(gram - np.eye(n))) > NORM_TOL:
            raise ValueError("system pointer states must be orthonormal")
        norms = np.linalg.norm(env, axis=2)
        if env.shape[1] and np.max(np.abs(norms - 1.0)) > NORM_TOL:
            raise ValueError("every environment ket must be normalized")
        for arr in (psi, sys_kets, env):
            arr.setflags(write=False)
        object.__setattr__(self, "amplitudes", psi)
        object.__setattr__(self, "system_states", sys_kets)
        object.__setattr__(self, "env_states", env)
        # Per-qubit branch overlap tensor <e_k(j)|e_k'(j)>, shape (N, n, n).
        # Everything downstream (spectra, decoherence factors, measurement
        # statistics) is built from products of slices of this tensor.
        ov = np.einsum("kja,lja->jkl", env.conj(), env)
        ov.setflags(write=False)
        object.__setattr__(self, "_env_overlaps", ov)

    @property
    def n_branches(self) -> int:
        return self.amplitudes.size

    @property
    def n_env(self) -> int:
        return self.env_states.shape[1]

    @property
    def d_system(self) -> int:
        return self.system_states.shape[1]

    @property
    def env_overlaps(self) -> np.ndarray:
        """Cached tensor O[j, k, l] = <e_k(j)|e_l(j)>, shape (N, n, n)."""
        return self._env_overlaps


def sample_couplings(n_env: int, seed: int) -> CouplingSet:
    """Draw ``n_env`` couplings uniformly from (0, 1], deterministic per seed."""
    if n_env < 1:
        raise ValueError("need at least one environment qubit")
    rng = np.random.default_rng(seed)
    # rng.random() lies in [0, 1); flip it to hit the (0, 1] interval.
    return CouplingSet(1.0 - rng.random(n_env))


def ising_evolve(
    couplings: CouplingSet, initial_system: Sequence[complex] | None = None
) -> BranchState:
    """Evolve (initial_system) (x) |0...0> under the commuting Ising coupling.

    Returns the exact branch form: one branch per sigma_z eigenstate with
    nonzero initial amplitude. The +1 branch's environment qubit j is
    exp(-i g_j t sigma_y)|0> = (cos g_j t, sin g_j t); the -1 branch gets
    the opposite rotation. Pointer inputs |0> or |1> therefore stay in a
    single product branch at all times.
    """
    if initial_system is None:
        initial_system = np.array([1.0, 1.0]) / np.sqrt(2.0)
    a = np.asarray(initial_system, dtype=complex).ravel()
    if a.size != 2:
        raise ValueError("initial_system must be a 2-vector")
    if abs(np.linalg.norm(a) - 1.0) > NORM_TOL:
        raise ValueError("initial_system must be normalized")

    theta = couplings.g * couplings.t
    plus = np.stack([np.cos(theta), np.sin(theta)], axis=1).astype(complex)
    minus = np.stack([np.cos(theta), -np.sin(theta)], axis=1).astype(complex)

    amps, kets, envs = [], [], []
    for amp, ket, env in ((a[0], [1.0, 0.0], plus), (a[1], [0.0, 1.0], minus)):
        if amp != 0.0:
            amps.append(amp)
            kets.append(ket)
            envs.append(env)
    return BranchState(np.array(amps), np.array(kets, dtype=complex), np.stack(envs))


def decoherence_factor(
    state: BranchState, subset: SubsystemsLike, branch_pair: tuple[int, int]
) -> complex:
    """Product of per-qubit record overlaps between two branches.

    Returns prod_{j in subset} <e_k(j)|e_k'(j)> for branch pair (k, k');
    the empty subset gives 1. Asking for k = k' raises, since that product
    is trivially 1 and such a call is always a bug.
    """
    k, kp = branch_pair
    if k == kp:
        raise ValueError("branch pair must be two distinct branches")
    n = state.n_branches
    if not (0 <= k < n and 0 <= kp < n):
        raise ValueError(f"branch indices {branch_pair} out of range for {n} branches")
    subset = _as_indices(subset, state.n_env)
    if len(subset) == 0:
        return 1.0 + 0.0j
    return complex(np.prod(state.env_overlaps[list(subset), k, kp]))


def to_dense(state: BranchState) -> PureState:
    """Expand the branch sum into a full statevector (oracle path).

    Subsystem 0 is the system; environment qubit j becomes subsystem j+1.
    Refuses environments past the dense guard.
    """
    if state.n_env + 1 > MAX_DENSE_SUBSYSTEMS:
        raise GuardError(
            f"{state.n_env} environment qubits exceeds the dense expansion guard"
        )
    dims = (state.d_system,) + (2,) * state.n_env
    total = np.zeros(int(np.prod(dims)), dtype=complex)
    for k in range(state.n_branches):
        factors = [state.system_states[k]] + [
            state.env_states[k, j] for j in range(state.n_env)
        ]
        total += state.amplitudes[k] * reduce(np.kron, factors)
    return PureState(total, dims)


def system_entropy(state: BranchState) -> float:
    """Entropy in bits of the reduced system state, from branch overlaps.

    The reduced system matrix in the pointer basis is
    psi_k conj(psi_k') <E_k'|E_k> with <E_k'|E_k> the product of per-qubit
    overlaps over the whole environment; only its n x n spectrum matters.
    """
    full = np.prod(state.env_overlaps, axis=0) if state.n_env else np.ones(
        (state.n_branches, state.n_branches), dtype=complex
    )
    m = np.outer(state.amplitudes, state.amplitudes.conj()) * full.T
    eigs = np.clip(np.linalg.eigvalsh(m), 0.0, None)
    # Renormalizing makes the single-branch (pointer input) case exactly 0.
    return _entropy_bits(eigs / eigs.sum())


@dataclass(frozen=True)
class SieveResult:
    """Entropy produced per candidate initial state, lowest (most classical) first.

    ``entropies[i, j]`` is the system entropy for the candidate at
    ``mu_grid[i]`` after evolving for ``t_grid[j]``. ``ranking`` orders the
    candidates by entropy at the final time, ascending.
    """

    mu_grid: np.ndarray
    t_grid: np.ndarray
    entropies: np.ndarray
    ranking: tuple[int, ...]


def predictability_sieve(
    couplings: CouplingSet,
    candidate_mu_grid: Sequence[float],
    t_grid: Sequence[float],
) -> SieveResult:
    """Rank candidate initial states by how little entropy monitoring produces.

    For each angle mu, the candidate is the +1 eigenstate of
    cos(mu) sigma_z + sin(mu) sigma_x. Pointer candidates (mu = 0) commute
    with the interaction and produce exactly zero entropy; superpositions
    decohere and rank lower.
    """
    mu_grid = np.asarray(list(candidate_mu_grid), dtype=float)
    times = np.asarray(list(t_grid), dtype=float)
    if mu_grid.size == 0 or times.size == 0:
        raise ValueError("candidate and time grids must be nonempty")
    entropies = np.empty((mu_grid.size, times.size))
    for i, mu in enumerate(mu_grid):
        initial = Observable(mu).eigenkets[0]
        for j, t in enumerate(times):
            entropies[i, j] = system_entropy(ising_evolve(couplings.at_time(t), initial))
    ranking = tuple(int(i) for i in np.argsort(entropies[:, -1], kind="stable"))
    return SieveResult(mu_grid, times, entropies, ranking)
