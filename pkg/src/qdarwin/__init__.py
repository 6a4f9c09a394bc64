"""Quantum Darwinism toolkit.

Simulates how a fragmented environment acquires redundant records of a
system's pointer states (decoherence, partial-information plots,
redundancy, the predictability sieve) and mechanizes the envariance
route from entanglement symmetry to squared-amplitude probabilities.
"""

__version__ = "0.1.0"

from .branches import (
    BranchState,
    CouplingSet,
    Observable,
    SieveResult,
    decoherence_factor,
    ising_evolve,
    predictability_sieve,
    sample_couplings,
    system_entropy,
    to_dense,
)
from .dense import (
    MAX_DENSE_SUBSYSTEMS,
    DensityOperator,
    GuardError,
    PureState,
    SubsystemSet,
    apply_unitary,
    entanglement_entropy,
    haar_random_state,
    overlap,
    partial_trace,
    shannon_entropy,
    split_seed,
    tensor_product,
    von_neumann_entropy,
)
from .envariance import (
    CopyReport,
    RationalAmplitudeSpec,
    SchmidtForm,
    Verdict,
    born_via_envariance,
    equiprobability,
    finegrain,
    is_envariant,
    repeatability_constraint,
    schmidt,
    verify_copy_map,
)
from .metrics import (
    FragmentSpec,
    PIPCurve,
    PIPPoint,
    RedundancyResult,
    RidgePoint,
    haar_pip,
    mutual_information,
    pip_curve,
    redundancy,
    redundancy_ridge,
    reduced_spectrum,
    shannon_mi_observable,
)
from .qbm import QbmCurve, QbmParams, QbmPoint, qbm_mutual_information, qbm_redundancy
