"""Closed-form recipes that produce realizable moment functions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import cones
from .core import DEFAULT_TOL, CovgapError, MatrixKind, SymmetricMatrix, Tolerances, ValidationError, validate_symmetric
from .gap import TensorArray

CLAMP_TOL = 1e-12


class Recipe(enum.Enum):
    ARCSIN = "arcsin"
    UNIT_DIAG_LIFT = "unit_diag_lift"
    INTEGER_BUMP = "integer_bump"
    LOGNORMAL = "lognormal"
    GAUSSIAN_MOMENT = "gaussian_moment"
    UNIT_VARIOGRAM = "unit_variogram"


@dataclass(frozen=True)
class ConstructionSpec:
    """A recipe plus its scalar parameter (``a`` for ARCSIN, ``eps`` for INTEGER_BUMP, ``q`` for moments)."""

    recipe: Recipe
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = self.params
        if self.recipe is Recipe.ARCSIN and not 0.0 <= float(p.get("a", 1.0)) <= 1.0:
            raise ValidationError("BAD_PARAMETER", "arcsin scale a must lie in [0, 1]")
        if self.recipe is Recipe.INTEGER_BUMP and "eps" not in p:
            raise ValidationError("BAD_PARAMETER", "integer_bump needs eps")
        if self.recipe is Recipe.GAUSSIAN_MOMENT:
            q = int(p.get("q", 4))
            if q % 2 or not 2 <= q <= 8:
                raise ValidationError("BAD_PARAMETER", "moment order q must be even and in [2, 8]")

    def apply(self, C):
        p = self.params
        if self.recipe is Recipe.ARCSIN:
            return arcsin_covariance(C, float(p.get("a", 1.0)))
        if self.recipe is Recipe.UNIT_DIAG_LIFT:
            return unit_diag_lift(C)
        if self.recipe is Recipe.INTEGER_BUMP:
            return integer_bump(C, float(p["eps"]))
        if self.recipe is Recipe.LOGNORMAL:
            return lognormal_cov(C)
        if self.recipe is Recipe.GAUSSIAN_MOMENT:
            return gaussian_moment(int(p.get("q", 4)), C)
        return unit_variogram_from_gaussian(C)

    def to_dict(self) -> dict:
        return {"recipe": self.recipe.value, "params": dict(self.params)}

    @classmethod
    def from_dict(cls, d: dict) -> "ConstructionSpec":
        return cls(Recipe(d["recipe"]), dict(d.get("params", {})))


def _entries(M) -> np.ndarray:
    return M.entries if isinstance(M, SymmetricMatrix) else np.asarray(M, dtype=float)


def _require_psd(C: np.ndarray, tol: Tolerances, what: str) -> None:
    if not cones.is_psd(C, tol).member:
        raise ValidationError("NOT_PSD", f"{what} must be positive semidefinite")


def _correlation(C, tol: Tolerances) -> np.ndarray:
    C = validate_symmetric(_entries(C), MatrixKind.COVARIANCE, tol).entries
    if np.abs(np.diag(C) - 1.0).max(initial=0.0) > CLAMP_TOL:
        raise ValidationError("NOT_CORRELATION", "correlation matrix needs a unit diagonal")
    if np.abs(C).max() > 1.0 + CLAMP_TOL:
        raise ValidationError("NOT_CORRELATION", "correlation entries must lie in [-1, 1]")
    _require_psd(C, tol, "correlation matrix")
    return np.clip(C, -1.0, 1.0)


def arcsin_covariance(C, a: float = 1.0, tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    """(2/pi) arcsin(a C): covariance of a [-1,1]-valued field, of a unit process when a = 1."""
    if not 0.0 <= a <= 1.0:
        raise ValidationError("BAD_PARAMETER", "a must lie in [0, 1]")
    C = _correlation(C, tol)
    R = np.arcsin(a * C) / (np.pi / 2)
    return validate_symmetric(R, MatrixKind.COVARIANCE, tol)


def unit_diag_lift(R, tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    """Overwrite the diagonal with ones."""
    R = validate_symmetric(_entries(R), MatrixKind.COVARIANCE, tol).entries.copy()
    off = R - np.diag(np.diag(R))
    if np.abs(off).max(initial=0.0) > 1.0 + CLAMP_TOL:
        raise ValidationError("OUT_OF_RANGE", "off-diagonal entries must lie in [-1, 1]")
    np.fill_diagonal(R, 1.0)
    return validate_symmetric(np.clip(R, -1.0, 1.0), MatrixKind.COVARIANCE, tol)


def integer_bump_threshold(R) -> float:
    """Smallest admissible eps: 2/3 when every diagonal entry is at least 1/3, else 1."""
    d = np.diag(_entries(R))
    return 2.0 / 3.0 if d.size and d.min() >= 1.0 / 3.0 else 1.0


def integer_bump(R, eps: float, tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    """R + eps I, the covariance of a field valued in the nonzero integers."""
    R = validate_symmetric(_entries(R), MatrixKind.COVARIANCE, tol).entries
    _require_psd(R, tol, "R")
    thr = integer_bump_threshold(R)
    if eps < thr - 1e-15:
        raise ValidationError("EPS_TOO_SMALL", f"eps = {eps} is below the admissible threshold {thr:.6g}")
    return validate_symmetric(R + eps * np.eye(len(R)), MatrixKind.COVARIANCE, tol)


def lognormal_cov(C, tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    """exp(C) entrywise: covariance of exp(Z - diag(C)/2) for a Gaussian Z with covariance C."""
    C = validate_symmetric(_entries(C), MatrixKind.COVARIANCE, tol).entries
    _require_psd(C, tol, "C")
    return validate_symmetric(np.exp(C), MatrixKind.COVARIANCE, tol)


def hafnian(S) -> float:
    """Sum over perfect matchings of products of paired entries."""
    S = _entries(S)
    q = S.shape[0]
    if S.ndim != 2 or S.shape[1] != q:
        raise ValidationError("NOT_SQUARE", "hafnian needs a square matrix")
    if q % 2:
        raise ValidationError("ODD_ORDER", "hafnian needs an even order")
    if q > 12:
        raise ValidationError("DIMENSION", "hafnian limited to order <= 12")

    def rec(idx: tuple[int, ...]) -> float:
        if not idx:
            return 1.0
        first, rest = idx[0], idx[1:]
        total = 0.0
        for j, k in enumerate(rest):
            total += S[first, k] * rec(rest[:j] + rest[j + 1:])
        return total

    return float(rec(tuple(range(q))))


def _pairings(q: int) -> list[list[tuple[int, int]]]:
    def rec(idx):
        if not idx:
            return [[]]
        first, rest = idx[0], idx[1:]
        out = []
        for j, k in enumerate(rest):
            for tail in rec(rest[:j] + rest[j + 1:]):
                out.append([(first, k)] + tail)
        return out

    return rec(tuple(range(q)))


def gaussian_moment(q: int, R, tol: Tolerances = DEFAULT_TOL) -> TensorArray:
    """Full n^q tensor of E[Z_k1 ... Z_kq] for a zero-mean Gaussian vector with covariance R."""
    if q % 2 or q < 2:
        raise ValidationError("BAD_PARAMETER", "q must be a positive even integer")
    R = validate_symmetric(_entries(R), MatrixKind.COVARIANCE, tol).entries
    n = R.shape[0]
    if q > 8 or n > 8:
        raise ValidationError("BUDGET", "gaussian_moment limited to q <= 8 and n <= 8")
    _require_psd(R, tol, "R")
    # Isserlis: sum over pairings of products of R over the paired axes
    T = np.zeros((n,) * q)
    letters = "abcdefgh"[:q]
    for pairing in _pairings(q):
        spec = ",".join(letters[i] + letters[j] for i, j in pairing) + "->" + letters
        T += np.einsum(spec, *([R] * len(pairing)))
    return TensorArray(T)


def unit_variogram_from_gaussian(C, tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    """(2/pi) arccos(C): semivariogram of the sign of a Gaussian field with correlation C."""
    C = _correlation(C, tol)
    G = np.arccos(C) / (np.pi / 2)
    np.fill_diagonal(G, 0.0)
    return validate_symmetric(G, MatrixKind.VARIOGRAM, tol)


class UnsupportedRecipe(CovgapError):
    def __init__(self, recipe: Recipe):
        super().__init__("UNSUPPORTED_RECIPE", f"recipe {recipe.value} has no sampling realization")
