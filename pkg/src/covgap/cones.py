"""Membership tests for the matrix cones the realizability theorems reduce to.

Each test returns a :class:`ConeVerdict`; a non-member comes with a vector or
matrix that violates the defining inequality when re-evaluated.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls

from .core import (
    DEFAULT_TOL,
    BudgetExceeded,
    Codomain,
    CovgapError,
    SymmetricMatrix,
    Tolerances,
    as_array,
    inner,
    validate_symmetric,
)

FACE_LIMIT = 10


@dataclass(frozen=True, eq=False)
class ConeVerdict:
    member: bool
    certificate: np.ndarray | None = None
    exact: bool = True
    value: float | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "member": self.member,
            "certificate": None if self.certificate is None else np.asarray(self.certificate).tolist(),
            "exact": self.exact,
            "value": self.value,
            **({"note": self.note} if self.note else {}),
        }


def _arr(S) -> np.ndarray:
    if isinstance(S, SymmetricMatrix):
        return S.entries
    return validate_symmetric(S).entries


def is_psd(S, tol: Tolerances | float = DEFAULT_TOL) -> ConeVerdict:
    tol = tol.psd_tol if isinstance(tol, Tolerances) else float(tol)
    a = _arr(S)
    w, V = np.linalg.eigh(a)
    if w[0] >= -tol:
        return ConeVerdict(True, value=float(w[0]))
    return ConeVerdict(False, V[:, 0].copy(), value=float(w[0]), note="eigenvector of the most negative eigenvalue")


def centering_projector(n: int) -> np.ndarray:
    return np.eye(n) - np.full((n, n), 1.0 / n)


def is_cnd(G, tol: Tolerances | float = DEFAULT_TOL) -> ConeVerdict:
    """Conditional negative semidefiniteness: lam G lam^T <= 0 whenever sum(lam) = 0."""
    tol = tol.psd_tol if isinstance(tol, Tolerances) else float(tol)
    g = _arr(G)
    n = g.shape[0]
    P = centering_projector(n)
    w, V = np.linalg.eigh(P @ (-g) @ P)
    if w[0] >= -tol:
        return ConeVerdict(True, value=float(w[0]))
    lam = P @ V[:, 0]
    lam /= np.linalg.norm(lam)
    return ConeVerdict(False, lam, value=float(lam @ g @ lam), note="zero-sum direction with lam G lam^T > 0")


def simplex_minimum(S) -> tuple[float, np.ndarray]:
    """Exact minimum of z S z^T over the standard simplex by face enumeration."""
    a = as_array(S)
    n = a.shape[0]
    best_val, best_z = math.inf, None
    for size in range(1, n + 1):
        for face in itertools.combinations(range(n), size):
            F = list(face)
            A = a[np.ix_(F, F)]
            K = np.zeros((size + 1, size + 1))
            K[:size, :size] = A
            K[:size, size] = -1.0
            K[size, :size] = 1.0
            rhs = np.zeros(size + 1)
            rhs[size] = 1.0
            if size > 1 and np.linalg.cond(K) > 1e12:
                # singular face: its minima also occur on a sub-face
                continue
            sol = np.linalg.solve(K, rhs)
            zF = sol[:size]
            if np.any(zF < -1e-12):
                continue
            zF = np.clip(zF, 0.0, None)
            zF /= zF.sum()
            v = float(zF @ A @ zF)
            if v < best_val:
                z = np.zeros(n)
                z[F] = zF
                best_val, best_z = v, z
    return best_val, best_z


def is_copositive(S, tol: Tolerances | float = DEFAULT_TOL, max_n: int = FACE_LIMIT) -> ConeVerdict:
    """z S z^T >= 0 on the nonnegative orthant, decided over all 2^n - 1 simplex faces."""
    tol = tol.psd_tol if isinstance(tol, Tolerances) else float(tol)
    a = _arr(S)
    n = a.shape[0]
    if n > max_n:
        raise BudgetExceeded("FACE_BUDGET", f"copositivity by face enumeration limited to n <= {max_n}, got {n}")
    if np.all(a >= 0):
        return ConeVerdict(True, value=None, note="entrywise nonnegative")
    val, z = simplex_minimum(a)
    if val >= -tol:
        return ConeVerdict(True, value=val)
    return ConeVerdict(False, z, value=val, note="simplex point with negative form")


def is_corner_positive(S, tol: Tolerances = DEFAULT_TOL, budget: int = 2**24) -> ConeVerdict:
    from .gap import gamma_gap

    g = gamma_gap(_arr(S), Codomain.two_point(-1, 1), tol, budget)
    if g.value >= -tol.gap_tol:
        return ConeVerdict(True, value=float(g.value))
    return ConeVerdict(False, g.minimizer, value=float(g.value), note="sign vector with negative form")


# ---------------------------------------------------------------------------
# complete positivity
# ---------------------------------------------------------------------------


class NotDoublyNonnegative(CovgapError):
    """A matrix failing PSD or entrywise nonnegativity is certainly not completely positive."""

    def __init__(self, message: str, certificate: np.ndarray):
        self.certificate = certificate
        super().__init__("NOT_DNN", message)


@dataclass(frozen=True)
class CPConfig:
    starts: int = 20
    iterations: int = 5000
    max_rank: int | None = None


def _dnn_check(R: np.ndarray, tol: Tolerances) -> None:
    n = R.shape[0]
    k, l = np.unravel_index(int(np.argmin(R)), R.shape)
    if R[k, l] < -tol.gap_tol:
        E = np.zeros((n, n))
        E[k, l] = E[l, k] = 1.0
        raise NotDoublyNonnegative(f"negative entry R[{k},{l}] = {R[k, l]:.6g}", E)
    v = is_psd(R, tol)
    if not v.member:
        raise NotDoublyNonnegative(f"negative eigenvalue {v.value:.6g}", v.certificate)


def _diagonally_dominant_factor(R: np.ndarray) -> np.ndarray | None:
    n = R.shape[0]
    off = R - np.diag(np.diag(R))
    slack = np.diag(R) - off.sum(axis=1)
    if np.any(slack < 0):
        return None
    cols = []
    for k, l in itertools.combinations(range(n), 2):
        if R[k, l] > 0:
            c = np.zeros(n)
            c[k] = c[l] = math.sqrt(R[k, l])
            cols.append(c)
    for k in range(n):
        if slack[k] > 0:
            c = np.zeros(n)
            c[k] = math.sqrt(slack[k])
            cols.append(c)
    if not cols:
        return np.zeros((n, 1))
    return np.column_stack(cols)


def _psd_root(R: np.ndarray, m: int) -> np.ndarray:
    w, V = np.linalg.eigh(R)
    B = V * np.sqrt(np.clip(w, 0.0, None))
    if m > B.shape[1]:
        B = np.hstack([B, np.zeros((B.shape[0], m - B.shape[1]))])
    return B


def _random_orthogonal(m: int, rng: np.random.Generator) -> np.ndarray:
    Q, Rr = np.linalg.qr(rng.standard_normal((m, m)))
    return Q * np.sign(np.diag(Rr))


def _rotate_to_nonnegative(B0: np.ndarray, Q: np.ndarray, iterations: int) -> np.ndarray | None:
    """Alternate between the nonnegative orthant and the orbit {B0 Q : Q orthogonal}."""
    scale = max(1.0, float(np.abs(B0).max()))
    for _ in range(iterations):
        BQ = B0 @ Q
        if BQ.min() >= -1e-13 * scale:
            return np.clip(BQ, 0.0, None)
        P = np.clip(BQ, 0.0, None)
        U, _, Vt = np.linalg.svd(B0.T @ P)
        Q = U @ Vt
    return None


def _anls_factor(R: np.ndarray, B: np.ndarray, iterations: int, alpha: float = 1.0) -> np.ndarray:
    """Symmetric NMF by alternating nonnegative least squares with a coupling penalty."""
    n, m = B.shape
    C = B.copy()
    scale = float(np.abs(R).max())
    for it in range(iterations):
        a = math.sqrt(alpha)
        for side in range(2):
            fixed = C if side == 0 else B
            A = np.vstack([fixed, a * np.eye(m)])
            other = B if side == 0 else C
            new = np.empty_like(other)
            for i in range(n):
                rhs = np.concatenate([R[i], a * (C[i] if side == 0 else B[i])])
                new[i], _ = nnls(A, rhs)
            if side == 0:
                B = new
            else:
                C = new
        if np.abs(B @ B.T - R).max() <= 1e-7 * scale:
            break
        alpha = min(alpha * 1.5, 1e6)
    return B


def cp_factorize(R, tol: Tolerances = DEFAULT_TOL, config: CPConfig = CPConfig(), seed: int = 0,
                 max_rank: int | None = None) -> np.ndarray | None:
    """Try to write R = B B^T with B >= 0 entrywise.

    Raises :class:`NotDoublyNonnegative` when R is not PSD or has a negative
    entry (a genuine refutation).  Returning ``None`` only means the search
    gave up; it says nothing about membership.
    """
    R = _arr(R)
    n = R.shape[0]
    _dnn_check(R, tol)
    limit = 1e-6 * max(float(np.abs(R).max()), np.finfo(float).tiny)
    max_rank = max_rank or config.max_rank or max(n, n * (n + 1) // 2)

    def accept(B):
        return B is not None and B.min() >= 0 and float(np.abs(B @ B.T - R).max()) <= limit

    B = _diagonally_dominant_factor(R)
    if B is not None and B.shape[1] <= max_rank and accept(B):
        return B

    rng = np.random.default_rng(seed)
    ranks = sorted({min(n, max_rank), min(n + 1, max_rank), min(2 * n, max_rank)})
    per = max(1, config.starts // len(ranks))
    for m in ranks:
        B0 = _psd_root(R, m)
        for _ in range(per):
            Q0 = np.eye(m) if _ == 0 else _random_orthogonal(m, rng)
            B = _rotate_to_nonnegative(B0, Q0, config.iterations)
            if accept(B):
                return B
    m = min(2 * n, max_rank)
    for _ in range(max(1, config.starts // 4)):
        start = np.abs(_psd_root(R, m) @ _random_orthogonal(m, rng))
        B = _anls_factor(R, start, min(config.iterations, 300))
        if accept(B):
            return B
    return None


# ---------------------------------------------------------------------------
# refutation
# ---------------------------------------------------------------------------

HORN = np.array([
    [1, -1, 1, 1, -1],
    [-1, 1, -1, 1, 1],
    [1, -1, 1, -1, 1],
    [1, 1, -1, 1, -1],
    [-1, 1, 1, -1, 1],
], dtype=float)


def _cycle_orders(k: int = 5):
    """Distinct cyclic orders of range(k) up to rotation and reflection."""
    seen = set()
    for perm in itertools.permutations(range(1, k)):
        p = (0,) + perm
        rev = (0,) + tuple(reversed(perm))
        if rev in seen:
            continue
        seen.add(p)
        yield p


@dataclass(frozen=True, eq=False)
class CopositiveWitness:
    matrix: np.ndarray
    inner_product: float
    family: str

    def to_dict(self) -> dict:
        return {"lambda": self.matrix.tolist(), "inner_product": self.inner_product, "family": self.family}


def cp_refute(R, tol: Tolerances = DEFAULT_TOL, budget: int = 5000) -> CopositiveWitness | None:
    """Search for a copositive L with <L, R> < 0, which proves R is not completely positive.

    Families, in order: PSD rank-one matrices from negative eigenvectors,
    elementary nonnegative matrices on negative entries, and scaled Horn
    matrices on every 5-point principal submatrix.  Each witness is re-checked
    copositive by exact face enumeration before it is returned.
    """
    R = _arr(R)
    n = R.shape[0]
    w, V = np.linalg.eigh(R)
    if w[0] < -tol.gap_tol:
        v = V[:, 0]
        L = np.outer(v, v)
        return CopositiveWitness(L, inner(L, R), "psd_rank_one")
    k, l = np.unravel_index(int(np.argmin(R)), R.shape)
    if R[k, l] < -tol.gap_tol:
        L = np.zeros((n, n))
        L[k, l] = L[l, k] = 1.0
        return CopositiveWitness(L, inner(L, R), "elementary_nonnegative")
    if n < 5:
        return None
    tried = 0
    for subset in itertools.combinations(range(n), 5):
        sub = R[np.ix_(subset, subset)]
        for order in _cycle_orders(5):
            tried += 1
            if tried > budget:
                return None
            P = np.eye(5)[list(order)]
            H = P.T @ HORN @ P
            val, d = simplex_minimum(H * sub)
            if val >= -tol.gap_tol:
                continue
            D = np.diag(d)
            L5 = D @ H @ D
            L5 /= np.abs(L5).max()
            L = np.zeros((n, n))
            L[np.ix_(subset, subset)] = L5
            ip = inner(L, R)
            if ip < -tol.gap_tol and is_copositive(L5, tol).member:
                return CopositiveWitness(L, ip, "horn")
    return None
