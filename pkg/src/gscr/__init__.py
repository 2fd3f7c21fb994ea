"""Grid strength and static voltage stability margin assessment for
multi-infeed LCC-HVDC systems.

The library models the reduced AC grid seen from the converter buses,
computes the generalized short circuit ratio (gSCR: smallest eigenvalue
of the weighted susceptance matrix J_eq = diag(1/P) B), the
inhomogeneity-corrected critical value CgSCR* built from the
participation-weighted converter control parameter T*, and validates the
resulting margin against the exact Jacobian-singularity boundary
det(J_sys) = 0.

Modules
-------
network   reduced AC-grid model, susceptance matrix, Kron reduction
spectral  eigen-decomposition of J_eq, first-order perturbation machinery
strength  gSCR / T* / CgSCR* / margin and the full assessment pipeline
boundary  sweeps, boundary bisection, contours, inhomogeneity study
config    JSON study configs (loading, validation, canonical hashing)
cli       the ``gscr`` command (reports, CSV tables, figures)
"""

from .errors import (
    BiorthogonalityBreakdown,
    ConfigError,
    CrossRefError,
    DegenerateLeadingEigenvalue,
    DimensionMismatch,
    DisconnectedFromGround,
    EliminatingConverterBus,
    GscrError,
    InvalidNetwork,
    NoBracket,
    NonPositiveRatedPower,
    NonPositiveReactance,
    ParseError,
    SchemaError,
    SingularInteriorBlock,
    UnknownBus,
)
from .network import (
    AcNetwork,
    Branch,
    BusSpec,
    SusceptanceMatrix,
    Violation,
    build_susceptance,
    kron_reduce,
    merge_parallel_branches,
    validate,
)
from .spectral import (
    JeqMatrix,
    PerturbationDiagnostics,
    SpectralData,
    build_jeq,
    eigen_jeq,
    perturbation_diagnostics,
    perturbed_eigenvalue,
)
from .strength import (
    ConverterSet,
    StrengthReport,
    analyze,
    cgscr_star,
    critical_eigenvalue,
    gscr,
    jsys_exact,
    lambda_crit_approx,
    weighted_t,
)
from .boundary import (
    BoundaryComparison,
    ContourPoint,
    LoadingDirection,
    StudyRow,
    SweepResult,
    SweepSample,
    compare_boundaries,
    find_approx_boundary,
    find_exact_boundary,
    gscr_contour,
    inhomogeneity_study,
    margin_profile,
    sweep,
)
from .config import StudyConfig, canonical_dict, config_hash, load_config

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "GscrError", "InvalidNetwork", "NonPositiveReactance",
    "DisconnectedFromGround", "EliminatingConverterBus",
    "SingularInteriorBlock", "NonPositiveRatedPower", "DimensionMismatch",
    "DegenerateLeadingEigenvalue", "BiorthogonalityBreakdown", "UnknownBus",
    "NoBracket", "ConfigError", "ParseError", "SchemaError", "CrossRefError",
    # network
    "AcNetwork", "Branch", "BusSpec", "SusceptanceMatrix", "Violation",
    "build_susceptance", "kron_reduce", "merge_parallel_branches", "validate",
    # spectral
    "JeqMatrix", "SpectralData", "PerturbationDiagnostics", "build_jeq",
    "eigen_jeq", "perturbed_eigenvalue", "perturbation_diagnostics",
    # strength
    "ConverterSet", "StrengthReport", "analyze", "cgscr_star",
    "critical_eigenvalue", "gscr", "jsys_exact", "lambda_crit_approx",
    "weighted_t",
    # boundary
    "LoadingDirection", "SweepSample", "SweepResult", "BoundaryComparison",
    "ContourPoint", "StudyRow", "sweep", "find_exact_boundary",
    "find_approx_boundary", "compare_boundaries", "gscr_contour",
    "inhomogeneity_study", "margin_profile",
    # config
    "StudyConfig", "load_config", "canonical_dict", "config_hash",
]
