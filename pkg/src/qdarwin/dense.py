"""Dense multi-qubit states, density operators, and entropy primitives.

Exact statevector algebra serving as the brute-force reference for the
branch-structured fast paths elsewhere in the package. Feasible up to
roughly 16 qubits; a hard memory guard refuses anything past
``MAX_DENSE_SUBSYSTEMS``.

Conventions used package-wide:

- Subsystems are indexed ``0..n-1``; subsystem 0 is the first tensor
  factor, i.e. the slowest-varying (most significant) digit of the
  basis-state index. This matches plain ``numpy.kron`` order, so
  ``|a> (x) |b>`` has amplitudes ``kron(a, b)``.
- All entropies are reported in bits (base-2 logarithms).
- Every function is a pure function of its inputs. Random sampling takes
  an explicit integer seed; nothing holds hidden RNG state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
NEGATIVE_EIG_TOL = 1e-10
UNITARY_TOL = 1e-10

#: Memory guard: dense operations refuse more subsystems than this (and
#: refuse amplitude vectors longer than 2**MAX_DENSE_SUBSYSTEMS). Module
#: level so a caller with more memory can raise it.
MAX_DENSE_SUBSYSTEMS = 26


class GuardError(ValueError):
    """A size or numerical-validity guard tripped.

    Raised when an input is too large for the dense path or when a
    quantity that should be non-negative up to roundoff (an eigenvalue,
    a probability) is negative beyond tolerance, which signals a bug in
    the caller rather than ordinary noise.
    """


SubsystemsLike = Union["SubsystemSet", Sequence[int]]


@dataclass(frozen=True)
class SubsystemSet:
    """Ordered collection of distinct subsystem positions."""

    indices: tuple[int, ...]

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(set(idx)) != len(idx):
            raise ValueError(f"subsystem indices must be unique, got {idx}")
        if any(i < 0 for i in idx):
            raise ValueError(f"subsystem indices must be non-negative, got {idx}")

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)


def _as_indices(subsystems: SubsystemsLike, num_subsystems: int) -> tuple[int, ...]:
    """Normalize a SubsystemSet or plain sequence and range-check it."""
    if not isinstance(subsystems, SubsystemSet):
        subsystems = SubsystemSet(tuple(subsystems))
    for i in subsystems.indices:
        if i >= num_subsystems:
            raise ValueError(
                f"subsystem index {i} out of range for {num_subsystems} subsystems"
            )
    return subsystems.indices


@dataclass(frozen=True)
class PureState:
    """Normalized state vector over a list of finite-dimensional subsystems.

    ``dims`` gives the per-subsystem dimensions; ``amplitudes`` has length
    ``prod(dims)`` and unit L2 norm (checked to ``NORM_TOL``).
    """

    amplitudes: np.ndarray
    dims: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).ravel().copy()
        dims = tuple(int(d) for d in self.dims) if self.dims else (amps.size,)
        if any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        if len(dims) > MAX_DENSE_SUBSYSTEMS or amps.size > 2**MAX_DENSE_SUBSYSTEMS:
            raise GuardError(
                f"dense state with {len(dims)} subsystems / {amps.size} amplitudes "
                f"exceeds the guard of {MAX_DENSE_SUBSYSTEMS} qubit-equivalents"
            )
        if amps.size != math.prod(dims):
            raise ValueError(
                f"amplitude vector length {amps.size} does not match prod(dims)={math.prod(dims)}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", dims)

    @property
    def num_subsystems(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def qubit(cls, a0: complex, a1: complex) -> "PureState":
        """Single-qubit state with amplitudes (a0, a1), normalized on entry."""
        v = np.array([a0, a1], dtype=complex)
        return cls(v / np.linalg.norm(v), (2,))

    @classmethod
    def computational(cls, dims: Sequence[int], digits: Sequence[int]) -> "PureState":
        """Product basis state |digits[0], digits[1], ...> over ``dims``."""
        dims = tuple(int(d) for d in dims)
        if len(digits) != len(dims):
            raise ValueError("need one digit per subsystem")
        index = 0
        for d, v in zip(dims, digits):
            if not 0 <= v < d:
                raise ValueError(f"digit {v} out of range for dimension {d}")
            index = index * d + v
        amps = np.zeros(math.prod(dims), dtype=complex)
        amps[index] = 1.0
        return cls(amps, dims)

    def reshaped(self) -> np.ndarray:
        """Amplitudes as an array with one axis per subsystem."""
        return self.amplitudes.reshape(self.dims)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, trace-one, positive-semidefinite operator.

    ``dims`` records the subsystem structure when known (needed to trace
    it further); it defaults to a single subsystem of the full dimension.
    Validation is strict: eigenvalues below ``-NEGATIVE_EIG_TOL`` raise,
    since they indicate an upstream bug rather than roundoff.
    """

    matrix: np.ndarray
    dims: tuple[int, ...] = ()
    eigenvalues: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex).copy()
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        d = m.shape[0]
        dims = tuple(int(x) for x in self.dims) if self.dims else (d,)
        if math.prod(dims) != d:
            raise ValueError(f"prod(dims)={math.prod(dims)} does not match dimension {d}")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix trace {tr!r} deviates from 1 beyond {TRACE_TOL}")
        eigs = np.linalg.eigvalsh(m)
        if eigs.min() < -NEGATIVE_EIG_TOL:
            raise GuardError(
                f"density matrix eigenvalue {eigs.min()!r} below -{NEGATIVE_EIG_TOL}; "
                "input is not a physical state"
            )
        m.setflags(write=False)
        eigs.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "eigenvalues", eigs)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def tensor_product(parts: Sequence[PureState]) -> PureState:
    """Tensor product of states; subsystem labels concatenate left to right."""
    if len(parts) == 0:
        raise ValueError("tensor_product of an empty list is undefined")
    dims: tuple[int, ...] = ()
    amps = np.ones(1, dtype=complex)
    for part in parts:
        dims = dims + part.dims
        if math.prod(dims) > 2**MAX_DENSE_SUBSYSTEMS:
            raise GuardError("tensor product exceeds the dense size guard")
        amps = np.kron(amps, part.amplitudes)
    return PureState(amps, dims)


def apply_unitary(state: PureState, u: np.ndarray, targets: SubsystemsLike) -> PureState:
    """Apply ``u`` to the listed target subsystems, identity elsewhere.

    ``u`` must act on the joint dimension of the targets, with its tensor
    factors matching the listed order.
    """
    targets = _as_indices(targets, state.num_subsystems)
    if len(targets) == 0:
        raise ValueError("need at least one target subsystem")
    u = np.asarray(u, dtype=complex)
    d_t = math.prod(state.dims[i] for i in targets)
    if u.shape != (d_t, d_t):
        raise ValueError(f"unitary shape {u.shape} does not match target dimension {d_t}")
    if np.max(np.abs(u.conj().T @ u - np.eye(d_t))) > UNITARY_TOL:
        raise ValueError("matrix is not unitary within tolerance")

    n = state.num_subsystems
    rest = [i for i in range(n) if i not in targets]
    perm = list(targets) + rest
    psi = np.transpose(state.reshaped(), perm).reshape(d_t, -1)
    psi = u @ psi
    permuted_dims = [state.dims[i] for i in perm]
    out = np.transpose(psi.reshape(permuted_dims), np.argsort(perm)).reshape(-1)
    return PureState(out, state.dims)


def partial_trace(
    state: PureState | DensityOperator, keep: SubsystemsLike
) -> DensityOperator:
    """Reduced density operator on the ``keep`` subsystems (listed order)."""
    keep = _as_indices(keep, len(state.dims))
    if len(keep) == 0:
        raise ValueError("keep must be a nonempty set of subsystems")
    dims = state.dims
    kept_dims = tuple(dims[i] for i in keep)

    if isinstance(state, PureState):
        rest = [i for i in range(len(dims)) if i not in keep]
        perm = list(keep) + rest
        m = np.transpose(state.reshaped(), perm).reshape(math.prod(kept_dims), -1)
        rho = m @ m.conj().T
        return DensityOperator(rho, kept_dims)

    n = len(dims)
    resh = state.matrix.reshape(dims + dims)
    # einsum with repeated labels traces the discarded row/column axes.
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    row = list(letters[:n])
    col = list(letters[n : 2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(letters[n + i] for i in keep)
    rho = np.einsum("".join(row) + "".join(col) + "->" + out, resh)
    d_keep = math.prod(kept_dims)
    return DensityOperator(rho.reshape(d_keep, d_keep), kept_dims)


def _entropy_bits(p: np.ndarray) -> float:
    """Entropy in bits of a non-negative vector summing to ~1; 0*lg0 = 0."""
    p = p[p > 0.0]
    return float(max(0.0, -np.sum(p * np.log2(p))))


def von_neumann_entropy(rho: DensityOperator) -> float:
    """Entropy of a density operator in bits, eigenvalues clipped at zero."""
    return _entropy_bits(np.clip(rho.eigenvalues, 0.0, None))


def shannon_entropy(p: Sequence[float] | np.ndarray) -> float:
    """Shannon entropy in bits of a probability vector.

    Entries may dip to -1e-12 from roundoff (clipped); anything more
    negative raises. The vector is renormalized if its sum is within
    1e-9 of 1, otherwise this raises.
    """
    p = np.asarray(p, dtype=float).ravel()
    if p.size and p.min() < -1e-12:
        raise GuardError(f"probability entry {p.min()!r} negative beyond tolerance")
    p = np.clip(p, 0.0, None)
    total = p.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"probabilities sum to {total!r}, not 1 within 1e-9")
    return _entropy_bits(p / total)


def entanglement_entropy(state: PureState, keep: SubsystemsLike) -> float:
    """Entropy in bits of the reduced state of a pure state on ``keep``.

    Computed from the singular values of the bipartition matrix, which is
    the eigenspectrum of the reduced density operator without forming it;
    exact linear algebra on the full amplitude vector.
    """
    keep = _as_indices(keep, state.num_subsystems)
    if len(keep) == 0:
        return 0.0
    rest = [i for i in range(state.num_subsystems) if i not in keep]
    perm = list(keep) + rest
    d_keep = math.prod(state.dims[i] for i in keep)
    m = np.transpose(state.reshaped(), perm).reshape(d_keep, -1)
    s = np.linalg.svd(m, compute_uv=False)
    return _entropy_bits(s**2)


def haar_random_state(num_qubits: int, seed: int) -> PureState:
    """Haar-random pure state on ``num_qubits`` qubits, deterministic per seed.

    A complex standard-normal vector normalized to unit length is Haar
    distributed on the sphere of pure states.
    """
    if num_qubits < 1:
        raise ValueError("need at least one qubit")
    if num_qubits > MAX_DENSE_SUBSYSTEMS:
        raise GuardError(f"{num_qubits} qubits exceeds the dense guard")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(2**num_qubits) + 1j * rng.standard_normal(2**num_qubits)
    return PureState(z / np.linalg.norm(z), (2,) * num_qubits)


def overlap(a: PureState, b: PureState) -> complex:
    """Inner product <a|b>; requires matching subsystem dimensions."""
    if a.dims != b.dims:
        raise ValueError(f"dimension mismatch: {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def split_seed(seed: int, *key: int) -> int:
    """Derive a child seed from a master seed and an integer key path.

    Stable counter-based splitting: the child depends only on (seed, key),
    never on how many other children were derived, so parallel and serial
    sampling schedules agree.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
