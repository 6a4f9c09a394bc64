"""Entanglement symmetries and probabilities derived from them.

This module mechanizes the chain repeatable copying -> preferred
orthogonal outcomes -> swap symmetry of entangled states ->
equiprobability -> squared-amplitude probabilities. Probabilities come
out of symmetry checks on concrete states, never out of an assumed
measure: reduced density operators and trace averaging are deliberately
not used anywhere in this module.

Three background assumptions are taken as given and not checked (they are
what the derivation rests on): a system's state is unaffected by
unitaries that act only on other systems; predictions about a system
follow from its state alone; and the global state of a composite system
determines the states of its parts.

Finegraining turns a branch with rational weight m/M into m equal-weight
sub-branches with an ancilla's help, reducing the general case to
equiprobability; the resulting branch probabilities are exact integer
ratios (``fractions.Fraction``), with floating point entering only in the
optional dense verification of the construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Sequence

import numpy as np

from .dense import (
    UNITARY_TOL,
    PureState,
    SubsystemsLike,
    _as_indices,
    apply_unitary,
    partial_trace,
)

PHASE_TOL = 1e-9
COEFF_EQUAL_TOL = 1e-10
#: Coefficients closer than this are treated as a degenerate block when
#: searching for a restoring transformation.
DEGENERACY_TOL = 1e-8
#: Dense verification of the finegraining construction is skipped above
#: this total dimension; the integer arithmetic it would confirm is exact.
VERIFY_DIM_LIMIT = 1 << 16


class Verdict(Enum):
    """Classification of a copy attempt against the repeatability identity."""

    UNSUCCESSFUL_COPY = "unsuccessful-copy"
    ORTHOGONAL_OK = "orthogonal-ok"
    VIOLATION = "violation"


def repeatability_constraint(uv: complex, euv: complex) -> Verdict:
    """Classify overlaps (<u|v>, <e_u|e_v>) after a repeatable copy attempt.

    A unitary that copies while leaving the originals unperturbed forces
    <u|v> = <u|v><e_u|e_v>, so either the records are identical (no copy
    was made) or the copied states are orthogonal (any record quality is
    then allowed, including a perfect one). Anything else violates
    unitarity.
    """
    uv = complex(uv)
    euv = complex(euv)
    if abs(uv) > 1.0 + 1e-12 or abs(euv) > 1.0 + 1e-12:
        raise ValueError("overlaps must have modulus at most 1")
    if abs(uv * (1.0 - euv)) > 1e-10:
        return Verdict.VIOLATION
    if abs(euv - 1.0) <= 1e-10:
        return Verdict.UNSUCCESSFUL_COPY
    if abs(uv) <= 1e-10:
        return Verdict.ORTHOGONAL_OK
    # Product is consistent but neither factor is cleanly zero; classify
    # by whichever factor is closer to its degenerate value.
    return Verdict.UNSUCCESSFUL_COPY if abs(1.0 - euv) <= abs(uv) else Verdict.ORTHOGONAL_OK


@dataclass(frozen=True)
class CopyReport:
    """What a candidate copying unitary did to two system states.

    ``verdict`` is only meaningful when both system marginals came through
    unperturbed; a copier that entangles the system has already failed
    repeatability and gets ``system_preserved = False`` with no verdict.
    """

    overlap_uv: complex
    env_overlap: complex | None
    fidelity_u: float
    fidelity_v: float
    system_preserved: bool
    verdict: Verdict | None


def verify_copy_map(
    u_ket: Sequence[complex],
    v_ket: Sequence[complex],
    copier: np.ndarray,
    e0: Sequence[complex],
) -> CopyReport:
    """Run a copier on |u>|e_0> and |v>|e_0> and report what happened.

    Checks that the system states are unperturbed (marginal fidelity 1
    within 1e-9), extracts the record overlap <e_u|e_v>, and classifies
    the pair against the repeatability identity.
    """
    u = np.asarray(u_ket, dtype=complex).ravel()
    v = np.asarray(v_ket, dtype=complex).ravel()
    e0 = np.asarray(e0, dtype=complex).ravel()
    if u.shape != v.shape:
        raise ValueError("u and v must have the same dimension")
    for ket in (u, v, e0):
        if abs(np.linalg.norm(ket) - 1.0) > 1e-10:
            raise ValueError("input kets must be normalized")
    d_s, d_e = u.size, e0.size
    copier = np.asarray(copier, dtype=complex)
    if copier.shape != (d_s * d_e, d_s * d_e):
        raise ValueError(f"copier must act on dimension {d_s * d_e}")
    if np.max(np.abs(copier.conj().T @ copier - np.eye(d_s * d_e))) > UNITARY_TOL:
        raise ValueError("copier is not unitary within tolerance")

    records = []
    fidelities = []
    for ket in (u, v):
        out = copier @ np.kron(ket, e0)
        state = PureState(out, (d_s, d_e))
        rho_s = partial_trace(state, (0,)).matrix
        fidelities.append(float(np.vdot(ket, rho_s @ ket).real))
        records.append(ket.conj() @ out.reshape(d_s, d_e))

    preserved = all(f >= 1.0 - PHASE_TOL for f in fidelities)
    uv = complex(np.vdot(u, v))
    euv = None
    verdict = None
    if preserved:
        e_u = records[0] / np.linalg.norm(records[0])
        e_v = records[1] / np.linalg.norm(records[1])
        euv = complex(np.vdot(e_u, e_v))
        verdict = repeatability_constraint(uv, euv)
    return CopyReport(uv, euv, fidelities[0], fidelities[1], preserved, verdict)


@dataclass(frozen=True)
class SchmidtForm:
    """Bipartite decomposition sum_i c_i |l_i> |r_i| with c_i > 0 descending.

    ``left_basis`` and ``right_basis`` hold the kets as rows. Coefficients
    below 1e-12 are dropped at construction.
    """

    coefficients: np.ndarray
    left_basis: np.ndarray
    right_basis: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=float)
        left = np.asarray(self.left_basis, dtype=complex)
        right = np.asarray(self.right_basis, dtype=complex)
        if np.any(np.diff(c) > 0):
            raise ValueError("coefficients must be descending")
        if abs(np.sum(c**2) - 1.0) > 1e-10:
            raise ValueError("squared coefficients must sum to 1")
        for basis in (left, right):
            gram = basis.conj() @ basis.T
            if np.max(np.abs(gram - np.eye(basis.shape[0]))) > 1e-10:
                raise ValueError("Schmidt bases must be orthonormal")
        for arr in (c, left, right):
            arr.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "left_basis", left)
        object.__setattr__(self, "right_basis", right)

    @property
    def rank(self) -> int:
        return self.coefficients.size


def _bipartition_matrix(
    state: PureState, cut: SubsystemsLike
) -> tuple[np.ndarray, tuple[int, ...], tuple[int, ...]]:
    cut_idx = _as_indices(cut, state.num_subsystems)
    if len(cut_idx) == 0 or len(cut_idx) == state.num_subsystems:
        raise ValueError("cut must leave subsystems on both sides")
    rest = tuple(i for i in range(state.num_subsystems) if i not in cut_idx)
    d_l = math.prod(state.dims[i] for i in cut_idx)
    m = np.transpose(state.reshaped(), cut_idx + rest).reshape(d_l, -1)
    return m, cut_idx, rest


def schmidt(state: PureState, cut: SubsystemsLike) -> SchmidtForm:
    """Schmidt decomposition across the bipartition (cut | complement)."""
    m, _, _ = _bipartition_matrix(state, cut)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    keep = s > 1e-12
    form = SchmidtForm(s[keep], u[:, keep].T, vh[keep, :])
    rebuilt = (form.left_basis.T * form.coefficients) @ form.right_basis
    if np.linalg.norm(rebuilt - m) > 1e-9:
        raise ValueError("Schmidt reconstruction failed beyond tolerance")
    return form


def is_envariant(
    state: PureState, u_s: np.ndarray, cut: SubsystemsLike
) -> tuple[bool, np.ndarray | None]:
    """Can the action of ``u_s`` on the cut side be undone from the other side?

    Returns (True, u_e) with an explicit countertransformation when one
    exists, else (False, None). The witness is constructed through the
    Schmidt form: ``u_s`` qualifies exactly when it is unitary on the
    Schmidt support and block-diagonal across distinct coefficient values
    (phases always qualify; swaps only within degenerate blocks). The
    returned witness is always re-verified against the state up to a
    global phase before being reported.
    """
    cut_idx = _as_indices(cut, state.num_subsystems)
    rest = tuple(i for i in range(state.num_subsystems) if i not in cut_idx)
    d_l = math.prod(state.dims[i] for i in cut_idx)
    d_r = math.prod(state.dims[i] for i in rest)
    u_s = np.asarray(u_s, dtype=complex)
    if u_s.shape != (d_l, d_l):
        raise ValueError(f"u_s must act on the cut dimension {d_l}")
    if np.max(np.abs(u_s.conj().T @ u_s - np.eye(d_l))) > UNITARY_TOL:
        raise ValueError("u_s is not unitary within tolerance")

    form = schmidt(state, cut_idx)
    left = form.left_basis
    b = left.conj() @ u_s @ left.T  # action within the Schmidt support
    if np.max(np.abs(b.conj().T @ b - np.eye(form.rank))) > 1e-9:
        return False, None  # leaks out of the support: left marginal changed
    c = form.coefficients
    distinct = np.abs(c[:, None] - c[None, :]) > DEGENERACY_TOL
    if distinct.any() and np.max(np.abs(b[distinct])) > 1e-9:
        return False, None  # mixes branches of unequal weight

    right = form.right_basis
    support = right.T @ right.conj()
    u_e = right.T @ b.conj() @ right.conj() + (np.eye(d_r) - support)

    moved = apply_unitary(state, u_s, cut_idx)
    restored = apply_unitary(moved, u_e, rest)
    z = np.vdot(state.amplitudes, restored.amplitudes)
    phase = z / abs(z) if abs(z) > 0 else 1.0
    if np.linalg.norm(restored.amplitudes - phase * state.amplitudes) <= PHASE_TOL:
        return True, u_e
    return False, None


def equiprobability(state: PureState, cut: SubsystemsLike) -> np.ndarray:
    """Uniform branch probabilities for an equal-coefficient entangled state.

    Verified constructively: every pair of Schmidt branches is swapped on
    the cut side and the swap shown to be undoable from the other side,
    so no branch can be more probable than another; with probabilities
    summing to one, each branch gets 1/n. Unequal coefficients raise
    (finegrain first).
    """
    form = schmidt(state, cut)
    c = form.coefficients
    if c.max() - c.min() > COEFF_EQUAL_TOL:
        raise ValueError("not equiprobable: unequal Schmidt coefficients; finegrain first")
    n = form.rank
    d_l = form.left_basis.shape[1]
    for i in range(n):
        for j in range(i + 1, n):
            ui, uj = form.left_basis[i], form.left_basis[j]
            swap = (
                np.eye(d_l)
                - np.outer(ui, ui.conj())
                - np.outer(uj, uj.conj())
                + np.outer(ui, uj.conj())
                + np.outer(uj, ui.conj())
            )
            ok, _ = is_envariant(state, swap, cut)
            if not ok:
                raise RuntimeError(
                    f"swap of equal-weight branches ({i}, {j}) unexpectedly not undoable"
                )
    return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class RationalAmplitudeSpec:
    """Branch weights as positive integers over a common denominator.

    ``numerators`` are kept exactly as given (no gcd reduction) and must
    sum to ``denominator``.
    """

    numerators: tuple[int, ...]
    denominator: int

    def __post_init__(self) -> None:
        nums = tuple(int(m) for m in self.numerators)
        object.__setattr__(self, "numerators", nums)
        object.__setattr__(self, "denominator", int(self.denominator))
        if len(nums) == 0 or any(m < 1 for m in nums):
            raise ValueError("numerators must be positive integers")
        if sum(nums) != self.denominator:
            raise ValueError("numerators must sum to the common denominator")


def finegrain(
    spec: RationalAmplitudeSpec,
    system_kets: np.ndarray | None = None,
    env_kets: np.ndarray | None = None,
    verify: bool | str = "auto",
) -> tuple[PureState, list[Fraction]]:
    """Split branch k of weight m_k/M into m_k equal-weight sub-branches.

    Builds the state sum_k sqrt(m_k/M) |s_k>|E_k> where each |E_k| spreads
    uniformly over m_k dedicated environment basis states, then extends it
    with an ancilla through a controlled copy (|e_j>|c> picks up the index
    of e_j within its branch block). Subsystem order of the result is
    (system, environment, ancilla); across the cut (system+ancilla | env)
    it has exactly M equal Schmidt coefficients, so each fine branch is
    swappable with any other. Branch k owns m_k of the M interchangeable
    alternatives, and normalization over the mutually exclusive coarse
    outcomes fixes its probability at exactly m_k / M; the returned values
    are integer ratios, not sums of floating-point fine-grained weights.

    ``verify`` controls the dense check that the construction really has
    equal Schmidt coefficients: "auto" runs it when the total dimension is
    small enough, True forces it, False skips it.
    """
    m = spec.numerators
    big_m = spec.denominator
    n = len(m)

    if system_kets is None:
        system_kets = np.eye(n, dtype=complex)
    else:
        system_kets = np.asarray(system_kets, dtype=complex)
        if system_kets.ndim != 2 or system_kets.shape[0] != n:
            raise ValueError("system_kets must be an (n_branches, d_system) array")
        gram = system_kets.conj() @ system_kets.T
        if np.max(np.abs(gram - np.eye(n))) > 1e-10:
            raise ValueError("system kets must be orthonormal")

    if env_kets is None:
        supports = []
        offset = 0
        d_e = big_m
        env_kets = np.zeros((n, d_e), dtype=complex)
        for k, mk in enumerate(m):
            idx = list(range(offset, offset + mk))
            supports.append(idx)
            env_kets[k, idx] = 1.0 / math.sqrt(mk)
            offset += mk
    else:
        env_kets = np.asarray(env_kets, dtype=complex)
        if env_kets.ndim != 2 or env_kets.shape[0] != n:
            raise ValueError("env_kets must be an (n_branches, d_env) array")
        d_e = env_kets.shape[1]
        supports = []
        used: set[int] = set()
        for k, mk in enumerate(m):
            idx = [int(j) for j in np.flatnonzero(np.abs(env_kets[k]) > 1e-12)]
            if len(idx) != mk:
                raise ValueError(
                    f"branch {k} spreads over {len(idx)} basis states, needs exactly {mk}: "
                    "not fine-grainable"
                )
            mags = np.abs(env_kets[k, idx])
            if np.max(np.abs(mags - 1.0 / math.sqrt(mk))) > 1e-10:
                raise ValueError(f"branch {k} is not a uniform superposition: not fine-grainable")
            if used.intersection(idx):
                raise ValueError("branch supports overlap: not fine-grainable")
            used.update(idx)
            supports.append(idx)

    d_s = system_kets.shape[1]
    d_c = max(m)
    amps = np.zeros((d_s, d_e, d_c), dtype=complex)
    for k, mk in enumerate(m):
        # env_kets already carry 1/sqrt(m_k) per component, so every fine
        # branch ends up with modulus exactly 1/sqrt(M).
        weight = math.sqrt(mk / big_m)
        for rank, j in enumerate(supports[k]):
            amps[:, j, rank] += weight * env_kets[k, j] * system_kets[k]
    extended = PureState(amps.reshape(-1), (d_s, d_e, d_c))

    run_verify = verify is True or (verify == "auto" and extended.dim <= VERIFY_DIM_LIMIT)
    if run_verify:
        form = schmidt(extended, (0, 2))
        if form.rank != big_m or np.max(np.abs(form.coefficients - 1.0 / math.sqrt(big_m))) > 1e-10:
            raise RuntimeError("finegrained state does not have equal Schmidt coefficients")
        if big_m <= 12:
            equiprobability(extended, (0, 2))  # full pairwise swap check

    return extended, [Fraction(mk, big_m) for mk in m]


def _rationalize(probs: np.ndarray, max_denominator: int) -> list[Fraction]:
    """Common-denominator rational approximation of a probability vector.

    Each entry is approximated by continued-fraction convergents
    (``Fraction.limit_denominator``); when the denominators' lcm stays
    within the cap and the approximations sum to one they are used
    exactly, otherwise weights are re-apportioned over the capped
    denominator by largest remainder. Entries that round to zero stay
    exactly zero.
    """
    fracs = [Fraction(float(p)).limit_denominator(max_denominator) for p in probs]
    nz = [k for k, fr in enumerate(fracs) if fr > 0]
    if max_denominator < len(nz):
        raise ValueError(
            f"max_denominator={max_denominator} cannot host {len(nz)} nonzero branches"
        )
    out = [Fraction(0)] * len(fracs)
    if len(nz) == 1:
        out[nz[0]] = Fraction(1)
        return out

    denom_lcm = math.lcm(*(fracs[k].denominator for k in nz))
    if denom_lcm <= max_denominator and sum(fracs[k] for k in nz) == 1:
        for k in nz:
            out[k] = fracs[k]
        return out

    # Largest-remainder apportionment over the capped denominator.
    cap = max_denominator
    mass = float(np.sum(probs[nz]))
    quotas = np.asarray([float(probs[k]) / mass * cap for k in nz])
    counts = np.floor(quotas).astype(int)
    shortfall = cap - int(counts.sum())
    order = np.argsort(quotas - np.floor(quotas))[::-1]
    for i in range(shortfall):
        counts[order[i % len(nz)]] += 1
    for k, c in zip(nz, counts):
        out[k] = Fraction(int(c), cap)
    return out


def born_via_envariance(
    amplitudes: Sequence[complex], max_denominator: int
) -> list[Fraction]:
    """Branch probabilities from amplitudes, by finegraining to equiprobability.

    Squared moduli are approximated by rationals over a common denominator
    capped at ``max_denominator`` and the rational case is settled by the
    finegraining construction; incommensurate weights are thereby handled
    to within 1/max_denominator per branch (continuity does the rest).
    A single surviving branch is the certainty case and returns
    probability one directly. Results are exact ``Fraction`` values.
    """
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size == 0:
        raise ValueError("amplitude vector is empty")
    if abs(np.linalg.norm(a) - 1.0) > 1e-9:
        raise ValueError("amplitudes must be normalized")
    probs = np.abs(a) ** 2
    rationals = _rationalize(probs, max_denominator)
    nz = [k for k, fr in enumerate(rationals) if fr > 0]
    if len(nz) == 1:
        return rationals

    common = math.lcm(*(rationals[k].denominator for k in nz))
    numerators = tuple(int(rationals[k] * common) for k in nz)
    spec = RationalAmplitudeSpec(numerators, common)

    total_dim = len(nz) * common * max(numerators)
    if total_dim <= VERIFY_DIM_LIMIT:
        _, fine = finegrain(spec)
    else:
        # The dense construction is only a witness; the probabilities are
        # fixed by the integer structure either way.
        fine = [Fraction(mk, common) for mk in numerators]

    out = [Fraction(0)] * a.size
    for k, fr in zip(nz, fine):
        out[k] = fr
    return out
