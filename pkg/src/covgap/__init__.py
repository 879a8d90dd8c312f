"""Gap inequalities and realizability checks for moment functions of random fields."""

from .core import (
    Codomain,
    CodomainKind,
    CovgapError,
    GapResult,
    MatrixKind,
    SymmetricMatrix,
    Tolerances,
    parse_codomain,
    validate_symmetric,
)
from .gap import eta_gap, gamma_gap, gamma_gap_tensor, zeta_gap
from .realizability import Status, Verdict, check_covariance, check_moment, check_variogram

__all__ = [
    "Codomain",
    "CodomainKind",
    "CovgapError",
    "GapResult",
    "MatrixKind",
    "Status",
    "SymmetricMatrix",
    "Tolerances",
    "Verdict",
    "check_covariance",
    "check_moment",
    "check_variogram",
    "eta_gap",
    "gamma_gap",
    "gamma_gap_tensor",
    "parse_codomain",
    "validate_symmetric",
    "zeta_gap",
]
