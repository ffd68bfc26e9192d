"""disscat: spectral simulation of a driven-dissipative parity-symmetric mode.

Truncated-Fock Lindblad dynamics for a two-photon-driven cavity with one- and
two-photon loss and dephasing: superparity sector decomposition, dense
non-Hermitian spectra, the quadratic-limit analytic spectrum, mean-field phase
structure, the cat-qubit error-quench protocol, and steady-state-manifold
diagnostics.
"""

from .fock import (
    DegenerateCat,
    FockSpace,
    Ket,
    Operator,
    TruncationError,
    annihilation,
    auto_dim,
    cat_state,
    coherent_state,
    creation,
    fock_state,
    number,
    parity,
    required_dim,
)
from .lindblad import (
    LindbladModel,
    SuperOperator,
    adjoint_superoperator,
    apply,
    apply_adjoint,
    boundary_leakage,
    guard_population,
    hamiltonian,
    jump_operators,
    superoperator,
    unvec,
    vec,
)
from .symmetry import (
    SectorDecomposition,
    SymmetryClass,
    SymmetryViolation,
    classify,
    decompose,
    decompose_model,
    parity_ordering,
    sector_indices,
)
from .spectra import (
    DefectiveBlock,
    SpectralData,
    dissipative_gap,
    eig_sectors,
    sector_eigenvalues,
    spectral_data,
    steady_states,
)
from .thirdq import BrokenPhase, QuadraticSpectrum, analytic_gap, many_body, single_particle
from .meanfield import MeanFieldSolution, boundary_lambda, residual, solve
from .protocol import (
    IntegratorFailure,
    QuenchReport,
    QuenchSpec,
    evolve,
    evolve_many,
    extract_qubit_structure,
    fidelity,
    purity,
    run_quench,
    trace_distance,
)
from .diagnostics import (
    Ambiguous,
    ManifoldReport,
    NoOffdiagZeroMode,
    asymptotic_projection,
    classify_structure,
    conserved_quantity_check,
    gamma_factors,
    ns_analysis,
    ns_evidence,
    project_steady,
)

__version__ = "0.1.0"
