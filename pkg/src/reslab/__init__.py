"""Resonances of open quantum systems: non-Hermitian effective Hamiltonians
and an open microwave billiard solved by exterior complex scaling."""

from .core import (
    ComplexEnergy,
    MixingResult,
    ResonanceSet,
    ResonanceState,
    biorthogonality_measure,
    eig_complex_symmetric,
    match_states,
    mixing_coefficients,
)
from .errors import (
    DefectiveMatrix,
    DimensionMismatch,
    EmptyWindow,
    GridTooCoarse,
    IoFailure,
    NoConvergence,
    NonSymmetric,
    ParseError,
    PoleOnAxis,
    ReslabError,
    SingularSystem,
    SymmetryViolation,
    ValidationError,
)
from .schematic import (
    CrossingReport,
    StatisticalParams,
    TwoLevelParams,
    build_statistical,
    build_two_level,
    crossing_conditions,
    dressed_couplings,
    eigenvalues_v,
    eigenvalues_w,
    find_critical_coupling,
    resonance_s_matrix,
    s_matrix_direct,
)

__version__ = "0.1.0"

__all__ = [
    "ComplexEnergy",
    "CrossingReport",
    "DefectiveMatrix",
    "DimensionMismatch",
    "EmptyWindow",
    "GridTooCoarse",
    "IoFailure",
    "MixingResult",
    "NoConvergence",
    "NonSymmetric",
    "ParseError",
    "PoleOnAxis",
    "ReslabError",
    "ResonanceSet",
    "ResonanceState",
    "SingularSystem",
    "StatisticalParams",
    "SymmetryViolation",
    "TwoLevelParams",
    "ValidationError",
    "biorthogonality_measure",
    "build_statistical",
    "build_two_level",
    "crossing_conditions",
    "dressed_couplings",
    "eig_complex_symmetric",
    "eigenvalues_v",
    "eigenvalues_w",
    "find_critical_coupling",
    "match_states",
    "mixing_coefficients",
    "resonance_s_matrix",
    "s_matrix_direct",
]
