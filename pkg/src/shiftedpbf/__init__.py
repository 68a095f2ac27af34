"""Shifted positive bidiagonal factorizations of banded operators, their
multiple orthogonal polynomials and the associated discrete matrix measures."""

__version__ = "0.1.0"

from .banded import (
    BandedOperatorSpec,
    StarterVectors,
    Truncation,
    constant_spec,
    default_shift,
    dense_power,
    entry,
    hermite_spec,
    infinity_norm,
    jacobi_spec,
    path_expansion_entry,
    stabilization_identity_check,
    truncate,
)
from .estimator import ShiftedPBFQuadrature, resolve_shift
from .exceptions import (
    ComplexSpectrumError,
    ContractViolation,
    ConvergenceError,
    DegenerateNormalizationError,
    InternalConsistencyError,
    OutOfRangeError,
    ShapeError,
    ShiftedPBFError,
    ShiftNotAdmissible,
    SimplicityError,
    SolverError,
    SpecError,
    StabilizationError,
    ZeroExtremeDiagonalError,
)
from .io import load_spec, load_starters, spec_from_dict
from .pbf import (
    BidiagonalFactorization,
    factorize_pbf,
    is_pbf_admissible,
    leading_minors,
    minimal_admissible_shift,
    oscillatory_check_tridiagonal,
    synthesize_pbf_operator,
)
from .polynomials import (
    Polynomial,
    RecursionTable,
    block_determinant_identity_check,
    build_table,
    characteristic_polynomial,
    degree_report,
    determinantal_Q,
    determinantal_R,
)
from .quadrature import (
    DiscreteMatrixMeasure,
    MomentMeasure,
    MomentTensor,
    biorthogonality_check,
    build_quadrature,
    christoffel,
    degrees_of_precision,
    discrete_measure,
    exactness_profile,
    helly_moment_diagnostic,
    mass_identity_check,
    moment_tensor,
    quadrature_moment,
    recentering_check,
    spectral_representation_check,
    stabilization_threshold,
    steplike_orthogonality_check,
    tail_bound_report,
)
from .spectral import (
    SpectralDecomposition,
    charpoly_agreement,
    decompose,
    eigenpairs,
    eigenpairs_extended,
    eigenvalues,
    eigenvector_agreement,
    eigenvectors_from_determinantal_formula,
    spectral_decomposition_check,
)
