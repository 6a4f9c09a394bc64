"""Information-theoretic diagnostics: mutual information, partial-information
plots, redundancy, and observable-resolved (Shannon) information.

Everything operating on a ``BranchState`` runs through the branch overlap
algebra rather than dense vectors. For a state with n branches, any reduced
density operator obtained by keeping the system and/or an environment
fragment F has at most n nonzero eigenvalues: writing the kept and discarded
parts of branch k as |K_k> and |D_k>,

    rho = sum_kk'  psi_k conj(psi_k') <D_k'|D_k>  |K_k><K_k'|

so the nonzero spectrum is that of an n x n matrix built from branch
amplitude products and per-qubit overlap products. This is exact (no
truncation) and makes 50-qubit environments as cheap as 5-qubit ones.

Fragment averages are seeded and reproducible: the sample for fragment
size m, repetition i is drawn from a child seed derived by counter
splitting, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .branches import BranchState, CouplingSet, Observable, ising_evolve, system_entropy
from .dense import (
    MAX_DENSE_SUBSYSTEMS,
    GuardError,
    PureState,
    SubsystemsLike,
    _as_indices,
    _entropy_bits,
    entanglement_entropy,
    haar_random_state,
    shannon_entropy,
    split_seed,
)

#: Enumerating product-measurement outcomes is exponential in fragment size.
MAX_MEASURED_FRAGMENT = 20

MEASUREMENT_SCHEMES = ("per-qubit-optimal", "random-bases")


@dataclass(frozen=True)
class FragmentSpec:
    """A fragment: a subset of environment qubit indices out of ``n_env``."""

    indices: tuple[int, ...]
    n_env: int

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if len(set(idx)) != len(idx):
            raise ValueError("fragment indices must be unique")
        if any(not 0 <= i < self.n_env for i in idx):
            raise ValueError(f"fragment indices {idx} out of range for N={self.n_env}")

    @property
    def fraction(self) -> float:
        return len(self.indices) / self.n_env

    @property
    def size(self) -> int:
        return len(self.indices)


def _fragment_indices(state: BranchState, fragment) -> tuple[int, ...]:
    if isinstance(fragment, FragmentSpec):
        if fragment.n_env != state.n_env:
            raise ValueError(
                f"fragment is over {fragment.n_env} qubits, state has {state.n_env}"
            )
        return fragment.indices
    return _as_indices(fragment, state.n_env)


def reduced_spectrum(
    state: BranchState, keep_system: bool, fragment: FragmentSpec | SubsystemsLike = ()
) -> np.ndarray:
    """Nonzero spectrum of the reduced state on (system?) + fragment.

    Returned eigenvalues are clipped at zero, renormalized, sorted
    descending, and stripped of exact zeros. Keeping neither the system
    nor any fragment qubit yields the trivial spectrum [1.0].
    """
    kept = _fragment_indices(state, fragment)
    n = state.n_branches
    psi = state.amplitudes
    ov = state.env_overlaps
    kept_mask = np.zeros(state.n_env, dtype=bool)
    kept_mask[list(kept)] = True

    def prod_over(mask: np.ndarray) -> np.ndarray:
        if not mask.any():
            return np.ones((n, n), dtype=complex)
        return np.prod(ov[mask], axis=0)

    if keep_system:
        # Kept Gram is the identity (pointer states orthonormal), so the
        # spectrum is that of psi_k conj(psi_k') <D_k'|D_k>.
        disc = prod_over(~kept_mask)
        m = np.outer(psi, psi.conj()) * disc.T
        eigs = np.linalg.eigvalsh(m)
    elif len(kept) == 0:
        return np.array([1.0])
    else:
        # System discarded: its orthogonality makes the weight matrix
        # diagonal, leaving |psi| G |psi| with G the kept-part Gram.
        g = prod_over(kept_mask)
        w = np.abs(psi)
        eigs = np.linalg.eigvalsh(g * np.outer(w, w))

    eigs = np.clip(eigs, 0.0, None)
    total = eigs.sum()
    if abs(total - 1.0) > 1e-9:
        raise GuardError(f"reduced spectrum sums to {total!r}, not 1 within 1e-9")
    eigs = np.sort(eigs / total)[::-1]
    return eigs[eigs > 0.0]


def mutual_information(
    state: BranchState, fragment: FragmentSpec | SubsystemsLike
) -> float:
    """Quantum mutual information I(S:F) = H_S + H_F - H_SF in bits."""
    h_s = _entropy_bits(reduced_spectrum(state, True, ()))
    h_f = _entropy_bits(reduced_spectrum(state, False, fragment))
    h_sf = _entropy_bits(reduced_spectrum(state, True, fragment))
    return h_s + h_f - h_sf


@dataclass(frozen=True)
class PIPPoint:
    m: int
    f: float
    i_mean: float
    i_stddev: float


@dataclass(frozen=True)
class PIPCurve:
    """Partial-information plot: averaged I(S:F) per fragment size.

    ``plateau`` is H_S in bits, the level the curve plateaus at for
    redundantly imprinted states. For a pure global state the endpoint
    satisfies I(N) = 2 * plateau.
    """

    points: tuple[PIPPoint, ...]
    plateau: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        ms = [p.m for p in self.points]
        if ms != sorted(ms):
            raise ValueError("points must be sorted by fragment size")
        if self.points:
            first, last = self.points[0], self.points[-1]
            if first.m == 0 and abs(first.i_mean) > 1e-9:
                raise ValueError("I at m=0 must be 0")
            if abs(last.i_mean - 2.0 * self.plateau) > 1e-9:
                raise ValueError("I at m=N must equal 2 * plateau for a pure state")
        for p in self.points:
            if not -1e-9 <= p.i_mean <= 2.0 * self.plateau + 1e-9:
                raise ValueError(f"I({p.m}) = {p.i_mean} outside [0, 2 H_S]")

    @property
    def fragment_sizes(self) -> np.ndarray:
        return np.array([p.m for p in self.points])

    @property
    def i_means(self) -> np.ndarray:
        return np.array([p.i_mean for p in self.points])


def _sample_fragment(n_env: int, m: int, seed: int) -> tuple[int, ...]:
    rng = np.random.default_rng(seed)
    return tuple(int(i) for i in np.sort(rng.choice(n_env, size=m, replace=False)))


def pip_curve(state: BranchState, n_samples: int, seed: int) -> PIPCurve:
    """Averaged I(S:F) over random m-qubit fragments, for every m = 0..N.

    For each size, ``n_samples`` fragments are drawn uniformly (elements
    without replacement); sizes 0 and N have a single possible fragment
    and are computed once. The sample for (m, i) depends only on
    (seed, m, i), so execution order cannot change the curve.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    n = state.n_env
    h_s = _entropy_bits(reduced_spectrum(state, True, ()))
    points = []
    for m in range(n + 1):
        if m == 0:
            values = np.zeros(1)
        elif m == n:
            values = np.array([mutual_information(state, tuple(range(n)))])
        else:
            values = np.array(
                [
                    mutual_information(state, _sample_fragment(n, m, split_seed(seed, m, i)))
                    for i in range(n_samples)
                ]
            )
        points.append(PIPPoint(m, m / n, float(values.mean()), float(values.std())))
    return PIPCurve(tuple(points), h_s, n_samples, seed)


@dataclass(frozen=True)
class RedundancyResult:
    """Redundancy R = 1/f at information deficit ``delta``.

    ``crossing_size`` is the (possibly fractional) fragment size at which
    the averaged information first reaches (1 - delta) * H_S; fragments
    are discrete, so sizes between integers are linear interpolations and
    flagged as such. A fragment never shrinks below one qubit.
    """

    delta: float
    f_delta: float
    r_delta: float
    interpolated: bool
    crossing_size: float
    h_s: float
    n_samples: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if not 0.0 < self.f_delta <= 1.0:
            raise ValueError("f_delta must lie in (0, 1]")
        if abs(self.r_delta * self.f_delta - 1.0) > 1e-12:
            raise ValueError("r_delta must equal 1/f_delta")


def _find_crossing(
    mean_info: Callable[[int], float], threshold: float, max_size: int
) -> tuple[float, bool] | None:
    """Smallest (interpolated) fragment size where mean_info reaches threshold.

    Walks sizes upward; interpolates linearly between bracketing integer
    sizes, but never below one qubit. Returns None if the threshold is not
    reached by ``max_size``.
    """
    prev = 0.0
    for m in range(1, max_size + 1):
        cur = mean_info(m)
        if cur >= threshold:
            if m == 1 or cur == threshold:
                return float(m), False
            frac = (threshold - prev) / (cur - prev)
            size = (m - 1) + frac
            return size, size != float(m)
        prev = cur
    return None


def redundancy(
    state: BranchState, delta: float, n_samples: int, seed: int
) -> RedundancyResult:
    """Number of disjoint fragments each holding (1 - delta) of H_S.

    Raises when H_S is (numerically) zero: a pointer-state input leaves no
    classical information to be redundant.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    h_s = _entropy_bits(reduced_spectrum(state, True, ()))
    if h_s <= 1e-6:
        raise GuardError("H_S is zero: no classical information to be redundant")
    n = state.n_env

    def mean_info(m: int) -> float:
        if m == n:
            return mutual_information(state, tuple(range(n)))
        return float(
            np.mean(
                [
                    mutual_information(state, _sample_fragment(n, m, split_seed(seed, m, i)))
                    for i in range(n_samples)
                ]
            )
        )

    crossing = _find_crossing(mean_info, (1.0 - delta) * h_s, n)
    if crossing is None:  # cannot happen: I(N) = 2 H_S > (1 - delta) H_S
        raise GuardError("information never reached the redundancy threshold")
    size, interpolated = crossing
    f_delta = size / n
    return RedundancyResult(
        delta=delta,
        f_delta=f_delta,
        r_delta=1.0 / f_delta,
        interpolated=interpolated,
        crossing_size=size,
        h_s=h_s,
        n_samples=n_samples,
        seed=seed,
    )


def haar_pip(
    n_system_qubits: int,
    n_env_qubits: int,
    n_states: int,
    n_fragment_samples: int,
    seed: int,
) -> PIPCurve:
    """Partial-information plot averaged over Haar-random global states.

    The no-structure baseline: for typical random pure states, fragments
    smaller than half the environment reveal almost nothing. Dense path,
    so the total qubit count is guarded.
    """
    total = n_system_qubits + n_env_qubits
    if total > MAX_DENSE_SUBSYSTEMS:
        raise GuardError(f"{total} qubits exceeds the dense guard")
    if min(n_system_qubits, n_env_qubits, n_states, n_fragment_samples) < 1:
        raise ValueError("all counts must be positive")

    sys_idx = tuple(range(n_system_qubits))
    states = [haar_random_state(total, split_seed(seed, 0, s)) for s in range(n_states)]
    h_s = [entanglement_entropy(psi, sys_idx) for psi in states]

    points = []
    for m in range(n_env_qubits + 1):
        values = []
        for s, psi in enumerate(states):
            if m == 0:
                values.append(0.0)
                continue
            if m == n_env_qubits:
                frags = [tuple(range(n_system_qubits, total))]
            else:
                frags = [
                    tuple(
                        n_system_qubits + j
                        for j in _sample_fragment(n_env_qubits, m, split_seed(seed, 1, s, m, i))
                    )
                    for i in range(n_fragment_samples)
                ]
            for frag in frags:
                h_f = entanglement_entropy(psi, frag)
                h_sf = entanglement_entropy(psi, sys_idx + frag)
                values.append(h_s[s] + h_f - h_sf)
        arr = np.array(values)
        points.append(PIPPoint(m, m / n_env_qubits, float(arr.mean()), float(arr.std())))
    return PIPCurve(tuple(points), float(np.mean(h_s)), n_fragment_samples, seed)


def _measurement_bases(
    state: BranchState, fragment: Sequence[int], scheme: str, scheme_seed: int | None
) -> np.ndarray:
    """Per-qubit orthonormal measurement bases, shape (len(fragment), 2, 2).

    'per-qubit-optimal' diagonalizes |e_0><e_0| - |e_1><e_1| on each qubit,
    the best fixed projective basis for telling the two branch records
    apart. 'random-bases' measures each fragment qubit along an
    independent uniform Bloch-sphere direction drawn from ``scheme_seed``
    (one draw per fragment position, in fragment order).
    """
    m = len(fragment)
    bases = np.empty((m, 2, 2), dtype=complex)
    if scheme == "per-qubit-optimal":
        if state.n_branches != 2:
            raise ValueError("per-qubit-optimal scheme is defined for 2-branch states")
        for pos, j in enumerate(fragment):
            e0, e1 = state.env_states[0, j], state.env_states[1, j]
            d = np.outer(e0, e0.conj()) - np.outer(e1, e1.conj())
            _, vecs = np.linalg.eigh(d)
            bases[pos, 0], bases[pos, 1] = vecs[:, 1], vecs[:, 0]
    elif scheme == "random-bases":
        if scheme_seed is None:
            raise ValueError("random-bases scheme needs a scheme_seed")
        rng = np.random.default_rng(scheme_seed)
        for pos in range(m):
            v = rng.standard_normal(3)
            x, y, z = v / np.linalg.norm(v)
            direction = np.array([[z, x - 1j * y], [x + 1j * y, -z]])
            _, vecs = np.linalg.eigh(direction)
            bases[pos, 0], bases[pos, 1] = vecs[:, 1], vecs[:, 0]
    else:
        raise ValueError(f"unknown measurement scheme {scheme!r}; use one of {MEASUREMENT_SCHEMES}")
    return bases


def shannon_mi_observable(
    state: BranchState,
    mu: float,
    fragment: FragmentSpec | SubsystemsLike,
    scheme: str = "per-qubit-optimal",
    scheme_seed: int | None = None,
) -> float:
    """Shannon mutual information between a system observable and fragment outcomes.

    The system is measured in the eigenbasis of cos(mu) sigma_z +
    sin(mu) sigma_x; each fragment qubit is measured in a product basis
    chosen by ``scheme``. Joint outcome probabilities are computed exactly
    from the branch structure (the unmeasured remainder enters only
    through its branch overlap products), so no dense expansion is needed;
    the 2^|F| outcome enumeration caps the fragment size instead.
    """
    frag = _fragment_indices(state, fragment)
    if len(frag) > MAX_MEASURED_FRAGMENT:
        raise GuardError(
            f"fragment of {len(frag)} qubits exceeds the outcome-enumeration "
            f"guard of {MAX_MEASURED_FRAGMENT}"
        )
    if state.d_system != 2:
        raise ValueError("observable-resolved information is defined for qubit systems")

    n = state.n_branches
    psi = state.amplitudes
    remainder = np.ones(state.n_env, dtype=bool)
    remainder[list(frag)] = False
    r_gram = (
        np.prod(state.env_overlaps[remainder], axis=0)
        if remainder.any()
        else np.ones((n, n), dtype=complex)
    )

    bases = _measurement_bases(state, frag, scheme, scheme_seed)
    # c[o, k]: amplitude product of branch k over this fragment outcome string.
    c = np.ones((1, n), dtype=complex)
    for pos, j in enumerate(frag):
        a = bases[pos].conj() @ state.env_states[:, j, :].T  # (2 outcomes, n)
        c = (c[:, None, :] * a[None, :, :]).reshape(-1, n)

    sys_amp = Observable(mu).eigenkets.conj() @ state.system_states.T  # (2, n)
    joint = np.empty((2, c.shape[0]))
    for i in range(2):
        ci = c * (psi * sys_amp[i])[None, :]
        joint[i] = np.einsum("ol,lk,ok->o", ci.conj(), r_gram, ci).real
    if joint.min() < -1e-9:
        raise GuardError(f"joint probability {joint.min()!r} negative beyond tolerance")
    joint = np.clip(joint, 0.0, None)
    return (
        shannon_entropy(joint.sum(axis=1))
        + shannon_entropy(joint.sum(axis=0))
        - shannon_entropy(joint.ravel())
    )


@dataclass(frozen=True)
class RidgePoint:
    """One (observable angle, action) cell of the redundancy ridge surface.

    ``reached`` is False when the fragment average never attains the
    threshold (the observable is not redundantly imprinted, or there was
    no decoherence at all); then r_delta = 0 and f_delta/crossing_size
    are NaN.
    """

    mu: float
    action: float
    r_delta: float
    f_delta: float
    crossing_size: float
    reached: bool
    h_reference: float
    h_system: float


def redundancy_ridge(
    couplings: CouplingSet,
    a_grid: Sequence[float],
    mu_grid: Sequence[float],
    delta: float = 0.1,
    n_samples: int = 50,
    seed: int = 0,
    scheme: str = "per-qubit-optimal",
    scheme_seed: int | None = None,
    max_fragment: int = 12,
) -> list[RidgePoint]:
    """Observable-resolved redundancy surface over (mu, action).

    For each cell the reference "all there is to know" level is the
    Shannon entropy of the observable's outcome distribution on the
    reduced system state; redundancy is 1/f at the smallest fragment
    fraction whose averaged Shannon information reaches (1 - delta) of
    that reference. Observables far from the pointer basis never get
    there (their information is not redundantly imprinted), which is what
    makes the surface a sharp ridge along mu = 0. The scan stops at
    ``max_fragment`` qubits; cells still short of threshold there are
    reported as not reached.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    a_grid = list(a_grid)
    mu_grid = list(mu_grid)
    if not a_grid or not mu_grid:
        raise ValueError("a_grid and mu_grid must be nonempty")
    n = couplings.n_env
    max_m = min(n, max_fragment)
    points: list[RidgePoint] = []
    for ai, a in enumerate(a_grid):
        state = ising_evolve(couplings.at_action(a))
        h_sys = system_entropy(state)
        full_gram = np.prod(state.env_overlaps, axis=0)
        rho_s = np.einsum(
            "k,l,lk,ka,lb->ab",
            state.amplitudes,
            state.amplitudes.conj(),
            full_gram,
            state.system_states,
            state.system_states.conj(),
        )
        for mi, mu in enumerate(mu_grid):
            kets = Observable(mu).eigenkets
            outcome_p = np.array([np.vdot(k, rho_s @ k).real for k in kets])
            h_ref = shannon_entropy(outcome_p)
            if h_sys <= 1e-6 or h_ref <= 1e-9:
                points.append(
                    RidgePoint(mu, a, 0.0, math.nan, math.nan, False, h_ref, h_sys)
                )
                continue

            def mean_info(m: int, _ai=ai, _mi=mi, _state=state, _mu=mu) -> float:
                return float(
                    np.mean(
                        [
                            shannon_mi_observable(
                                _state,
                                _mu,
                                _sample_fragment(n, m, split_seed(seed, _ai, _mi, m, i)),
                                scheme=scheme,
                                scheme_seed=scheme_seed,
                            )
                            for i in range(n_samples)
                        ]
                    )
                )

            crossing = _find_crossing(mean_info, (1.0 - delta) * h_ref, max_m)
            if crossing is None:
                points.append(
                    RidgePoint(mu, a, 0.0, math.nan, math.nan, False, h_ref, h_sys)
                )
            else:
                size, _ = crossing
                f_delta = size / n
                points.append(
                    RidgePoint(mu, a, 1.0 / f_delta, f_delta, size, True, h_ref, h_sys)
                )
    return points
