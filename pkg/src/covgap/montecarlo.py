"""Seeded sampling oracle for the closed-form constructions.

Gaussian draws come from numpy's Philox counter-based generator.  Samples are
produced in fixed chunks of ``CHUNK`` rows; chunk ``c`` uses the Philox key
``(seed, c)``, so any chunk can be regenerated on its own and the batch does
not depend on how chunks are scheduled.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .constructors import ConstructionSpec, Recipe, UnsupportedRecipe
from .core import DEFAULT_TOL, MatrixKind, SymmetricMatrix, Tolerances, ValidationError, validate_symmetric

CHUNK = 4096


class Transform(enum.Enum):
    NONE = "none"
    SIGN = "sign"
    UNIFORM_PM1 = "uniform_pm1"
    LOGNORMAL = "lognormal"


@dataclass(frozen=True, eq=False)
class SampleBatch:
    samples: np.ndarray
    seed: int
    covariance: np.ndarray
    transform: Transform = Transform.NONE

    def __post_init__(self):
        if self.samples.ndim != 2 or self.samples.shape[0] < 2:
            raise ValidationError("BAD_BATCH", "a batch needs at least two samples")

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_points(self) -> int:
        return self.samples.shape[1]

    def to_csv(self, path) -> None:
        header = ",".join(f"z{k}" for k in range(self.n_points))
        np.savetxt(path, self.samples, delimiter=",", header=header, comments="", fmt="%.17g")


def _chunk_normals(seed: int, chunk: int, rows: int, n: int) -> np.ndarray:
    key = np.array([seed, chunk], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).standard_normal((rows, n))


def gaussian_factor(C: np.ndarray) -> np.ndarray:
    """Factor L with L L^T ~ C, refusing inputs that need a large jitter.

    Well-conditioned inputs use the Cholesky factor of C + jitter I.  For
    numerically singular inputs the clipped eigen square root is used instead,
    so degenerate directions stay exactly degenerate.
    """
    w, V = np.linalg.eigh(C)
    scale = max(float(np.trace(C)), 1e-300)
    jitter = max(0.0, -float(w[0])) + 1e-12
    if jitter > 1e-6 * scale:
        raise ValidationError("TOO_INDEFINITE", f"covariance needs jitter {jitter:.3g}; input too indefinite")
    if w[0] > 1e-10 * scale:
        try:
            return np.linalg.cholesky(C + jitter * np.eye(len(C)))
        except np.linalg.LinAlgError:
            pass
    return V * np.sqrt(np.clip(w, 0.0, None))


def sample_gaussian(C, n_samples: int, seed: int = 0, tol: Tolerances = DEFAULT_TOL) -> SampleBatch:
    """n_samples i.i.d. zero-mean Gaussian vectors with covariance C."""
    C = validate_symmetric(C.entries if isinstance(C, SymmetricMatrix) else C, MatrixKind.COVARIANCE, tol).entries
    n = C.shape[0]
    L = gaussian_factor(C)
    out = np.empty((n_samples, n))
    for c, start in enumerate(range(0, n_samples, CHUNK)):
        rows = min(CHUNK, n_samples - start)
        out[start:start + rows] = _chunk_normals(seed, c, rows, n) @ L.T
    return SampleBatch(out, seed, C.copy())


def transform(batch: SampleBatch, kind: Transform | str) -> SampleBatch:
    """Pointwise maps of a Gaussian batch: sign, 2 Phi(z) - 1, or exp(z - C_kk / 2)."""
    kind = Transform(kind)
    if batch.transform is not Transform.NONE:
        raise ValidationError("BAD_BATCH", "transforms apply to raw Gaussian batches")
    d = np.diag(batch.covariance)
    if kind in (Transform.SIGN, Transform.UNIFORM_PM1) and np.abs(d - 1.0).max() > 1e-9:
        raise ValidationError("VARIANCE_MISMATCH", f"{kind.value} needs unit-variance marginals")
    Z = batch.samples
    if kind is Transform.SIGN:
        X = np.where(Z > 0, 1.0, -1.0)
    elif kind is Transform.UNIFORM_PM1:
        X = erf(Z / np.sqrt(2.0))
    elif kind is Transform.LOGNORMAL:
        X = np.exp(Z - d / 2)
    else:
        X = Z.copy()
    return SampleBatch(X, batch.seed, batch.covariance, kind)


def _mean_se(p: np.ndarray) -> tuple[float, float]:
    return float(p.mean()), float(p.std(ddof=1) / np.sqrt(len(p)))


def _pairwise(batch: SampleBatch, f) -> tuple[np.ndarray, np.ndarray]:
    if batch.n_samples < 100:
        raise ValidationError("TOO_FEW_SAMPLES", "estimators need at least 100 samples")
    X = batch.samples
    n = batch.n_points
    M = np.zeros((n, n))
    S = np.zeros((n, n))
    for k, l in itertools.combinations_with_replacement(range(n), 2):
        M[k, l], S[k, l] = _mean_se(f(X[:, k], X[:, l]))
        M[l, k], S[l, k] = M[k, l], S[k, l]
    return M, S


def empirical_noncentered_cov(batch: SampleBatch) -> tuple[np.ndarray, np.ndarray]:
    """Mean of Z_k Z_l with per-entry standard errors."""
    return _pairwise(batch, lambda a, b: a * b)


def empirical_semivariogram(batch: SampleBatch) -> tuple[np.ndarray, np.ndarray]:
    """Half mean squared increment with per-entry standard errors; exact zeros on the diagonal."""
    return _pairwise(batch, lambda a, b: 0.5 * (a - b) ** 2)


def empirical_moment(batch: SampleBatch, q: int) -> tuple[np.ndarray, np.ndarray]:
    """Full n^q tensor of sample means of Z_k1 ... Z_kq, with standard errors."""
    X = batch.samples
    n = batch.n_points
    M = np.zeros((n,) * q)
    S = np.zeros((n,) * q)
    for idx in itertools.combinations_with_replacement(range(n), q):
        m, s = _mean_se(np.prod(X[:, idx], axis=1))
        for perm in set(itertools.permutations(idx)):
            M[perm], S[perm] = m, s
    return M, S


@dataclass
class VerificationReport:
    recipe: str
    params: dict
    n_samples: int
    seed: int
    mc_sigmas: float
    passed: bool
    worst_entry: tuple[int, ...]
    worst_diff: float
    worst_se: float
    worst_ratio: float
    expected: np.ndarray = field(repr=False)
    empirical: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "recipe": self.recipe,
            "params": self.params,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "mc_sigmas": self.mc_sigmas,
            "status": "PASS" if self.passed else "FAIL",
            "worst_entry": list(self.worst_entry),
            "worst_diff": self.worst_diff,
            "worst_se": self.worst_se,
            "worst_ratio": self.worst_ratio,
            "expected": self.expected.tolist(),
            "empirical": self.empirical.tolist(),
        }


def compare(expected: np.ndarray, empirical: np.ndarray, se: np.ndarray, sigmas: float) -> tuple[bool, tuple, float, float, float]:
    """Entrywise |diff| <= sigmas * SE; returns the entry with the largest excess."""
    diff = np.abs(empirical - expected)
    excess = diff - sigmas * se
    worst = np.unravel_index(int(np.argmax(excess)), diff.shape)
    ratio = float(diff[worst] / se[worst]) if se[worst] > 0 else (0.0 if diff[worst] <= 1e-12 else np.inf)
    passed = bool(np.all(diff <= sigmas * se + 1e-12))
    return passed, tuple(int(i) for i in worst), float(diff[worst]), float(se[worst]), ratio


def verify_construction(spec: ConstructionSpec, C, n_samples: int = 100_000, seed: int = 0,
                        tol: Tolerances = DEFAULT_TOL) -> VerificationReport:
    """Sample the field realizing ``spec`` and compare its empirical moment with the closed form."""
    r = spec.recipe
    if r in (Recipe.INTEGER_BUMP, Recipe.UNIT_DIAG_LIFT):
        raise UnsupportedRecipe(r)
    C = C.entries if isinstance(C, SymmetricMatrix) else np.asarray(C, dtype=float)
    expected = spec.apply(C).entries
    base = sample_gaussian(C, n_samples, seed, tol)
    if r is Recipe.ARCSIN:
        a = float(spec.params.get("a", 1.0))
        if a == 1.0:
            kind = Transform.SIGN
        elif a == 0.5:
            kind = Transform.UNIFORM_PM1
        else:
            raise UnsupportedRecipe(r)
        emp, se = empirical_noncentered_cov(transform(base, kind))
    elif r is Recipe.LOGNORMAL:
        emp, se = empirical_noncentered_cov(transform(base, Transform.LOGNORMAL))
    elif r is Recipe.UNIT_VARIOGRAM:
        emp, se = empirical_semivariogram(transform(base, Transform.SIGN))
    else:
        emp, se = empirical_moment(base, int(spec.params.get("q", 4)))
    passed, worst, d, s, ratio = compare(expected, emp, se, tol.mc_sigmas)
    return VerificationReport(r.value, dict(spec.params), n_samples, seed, tol.mc_sigmas, passed, worst, d, s, ratio,
                              expected, emp)


def random_correlation(n: int, rng: np.random.Generator | int = 0, rank: int | None = None) -> np.ndarray:
    """Correlation matrix D^{-1/2} B B^T D^{-1/2} from a Gaussian B with ``rank`` columns."""
    rng = np.random.default_rng(rng)
    B = rng.standard_normal((n, rank or n))
    W = B @ B.T
    d = 1.0 / np.sqrt(np.diag(W))
    C = W * d[:, None] * d[None, :]
    np.fill_diagonal(C, 1.0)
    return (C + C.T) / 2
