"""Gap computations: gamma-, eta-, zeta- and tensor gaps.

All enumerations walk the candidate space in the canonical lexicographic order
of the codomain (smaller magnitude first, positive before negative), so the
returned certificate is the first minimizer in that order.  Budgets are hard
errors: an ``exact=True`` result is never a truncated search.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np
from scipy.special import gammaln

from .core import (
    DEFAULT_TOL,
    BudgetExceeded,
    Codomain,
    CodomainKind,
    GapMethod,
    GapResult,
    SymmetricMatrix,
    Tolerances,
    Unbounded,
    UnsupportedCombination,
    ValidationError,
    as_array,
    canonical_order_key,
    validate_symmetric,
)

ENUMERATION_BUDGET = 2**24
TENSOR_BUDGET = 2**20
LATTICE_BUDGET = 10**8
_CHUNK = 1 << 15


class IntegerGapReading(enum.Enum):
    COMPONENTWISE_NONZERO = "COMPONENTWISE_NONZERO"
    LATTICE_NONZERO = "LATTICE_NONZERO"


@dataclass(frozen=True, eq=False)
class TensorArray:
    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim < 2 or len(set(a.shape)) != 1:
            raise ValidationError("BAD_TENSOR", f"expected a q-dimensional n x ... x n array, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValidationError("NON_FINITE", "tensor entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def order(self) -> int:
        return self.entries.ndim

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def _matrix(L) -> np.ndarray:
    if isinstance(L, SymmetricMatrix):
        return L.entries
    return validate_symmetric(L).entries


def quadratic_form(L, z) -> float:
    z = np.asarray(z, dtype=float)
    return float(z @ as_array(L) @ z)


def is_psd_matrix(L: np.ndarray, tol: float) -> bool:
    return bool(np.linalg.eigvalsh(L)[0] >= -tol)


# ---------------------------------------------------------------------------
# enumeration engine
# ---------------------------------------------------------------------------


def grid_chunks(values: tuple[float, ...], n: int, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Yield all of ``values**n`` as row blocks, in lexicographic order of ``values``."""
    base = len(values)
    total = base**n
    vals = np.asarray(values, dtype=float)
    powers = base ** np.arange(n - 1, -1, -1, dtype=np.int64)
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // powers[None, :]) % base
        yield vals[digits]


def _check_budget(count: int, budget: int, what: str) -> None:
    if count > budget:
        raise BudgetExceeded("ENUMERATION_BUDGET_EXCEEDED", f"{what}: {count} candidates > budget {budget}")


def enumerate_min(values: tuple[float, ...], n: int, evaluate: Callable[[np.ndarray], np.ndarray],
                  budget: int = ENUMERATION_BUDGET, tie_tol: float = 0.0) -> tuple[float, np.ndarray]:
    """Minimize ``evaluate`` over ``values**n``; first minimizer in canonical order wins ties."""
    ordered = tuple(sorted(values, key=canonical_order_key))
    _check_budget(len(ordered) ** n, budget, "enumeration")
    best_val = math.inf
    best_z = None
    for Z in grid_chunks(ordered, n):
        f = evaluate(Z)
        i = int(np.argmin(f))
        m = float(f[i])
        if m < best_val - tie_tol:
            first = int(np.flatnonzero(f <= m + tie_tol)[0])
            best_val, best_z = m, Z[first].copy()
        elif m < best_val:
            best_val = m
    return best_val, best_z


def _tie_tol(L: np.ndarray, values) -> float:
    vmax = max(abs(v) for v in values) if values else 1.0
    return 1e-12 * max(1.0, float(np.abs(L).sum()) * vmax * vmax)


def _quad_rows(L: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    return lambda Z: np.einsum("ij,ij->i", Z @ L, Z)


def _enumerated_gap(L: np.ndarray, values: tuple[float, ...], budget: int) -> GapResult:
    val, z = enumerate_min(values, L.shape[0], _quad_rows(L), budget, _tie_tol(L, values))
    return GapResult(val, z, GapMethod.ENUMERATION, True)


# ---------------------------------------------------------------------------
# gamma gap
# ---------------------------------------------------------------------------


def gamma_gap(L, E: Codomain, tol: Tolerances = DEFAULT_TOL, budget: int = ENUMERATION_BUDGET,
              reading: IntegerGapReading = IntegerGapReading.COMPONENTWISE_NONZERO,
              seed: int = 0) -> GapResult:
    """inf of z L z^T over z in E^n, dispatched on the shape of ``E``."""
    L = _matrix(L)
    n = L.shape[0]
    psd = is_psd_matrix(L, tol.psd_tol)
    k = E.kind
    if psd and E.contains(0.0):
        return GapResult(0.0, np.zeros(n), GapMethod.ANALYTIC, True, "PSD and 0 in E")
    if E.is_finite:
        return _enumerated_gap(L, E.values, budget)
    if k in (CodomainKind.ALL_REALS, CodomainKind.INTEGERS):
        # unreachable when PSD (0 is in both sets)
        return GapResult(Unbounded.NEG_INF, None, GapMethod.ANALYTIC, True, "negative eigenvalue")
    if k in (CodomainKind.NONNEG_REALS, CodomainKind.NONPOS_REALS, CodomainKind.NATURALS):
        from .cones import is_copositive

        verdict = is_copositive(L, tol)
        if verdict.member:
            return GapResult(0.0, np.zeros(n), GapMethod.ANALYTIC, True, "copositive")
        return GapResult(Unbounded.NEG_INF, None, GapMethod.ANALYTIC, True, "not copositive")
    if k is CodomainKind.CLOSED_INTERVAL:
        return gamma_gap_interval(L, *E.params, tol=tol, budget=budget, seed=seed)
    if k is CodomainKind.NONZERO_INTEGERS:
        lam_min = float(np.linalg.eigvalsh(L)[0])
        if lam_min < -tol.psd_tol:
            return GapResult(Unbounded.NEG_INF, None, GapMethod.ANALYTIC, True, "negative eigenvalue")
        if lam_min <= tol.psd_tol:
            raise UnsupportedCombination(
                "UNSUPPORTED_COMBINATION", "integer gap of a singular PSD matrix is not computed")
        return gamma_gap_integer(L, reading, tol)
    raise UnsupportedCombination("UNSUPPORTED_COMBINATION", f"no gap routine for {E.render()}")


def _coordinate_descent(L: np.ndarray, z: np.ndarray, lo: float, hi: float, sweeps: int = 200) -> np.ndarray:
    n = len(z)
    diag = np.diag(L)
    for _ in range(sweeps):
        moved = 0.0
        for k in range(n):
            b = float(L[k] @ z - diag[k] * z[k])
            a = diag[k]
            # minimize a t^2 + 2 b t on [lo, hi]
            if a > 0:
                t = min(max(-b / a, lo), hi)
            else:
                t = lo if a * lo * lo + 2 * b * lo <= a * hi * hi + 2 * b * hi else hi
            moved = max(moved, abs(t - z[k]))
            z[k] = t
        if moved < 1e-14:
            break
    return z


def gamma_gap_interval(L, lo: float, hi: float, tol: Tolerances = DEFAULT_TOL,
                       budget: int = ENUMERATION_BUDGET, seed: int = 0) -> GapResult:
    """Gap over a box [lo, hi]^n.

    When every diagonal entry is <= 0 the form is concave along each axis, so
    the minimum sits on a vertex and vertex enumeration is exact.  Otherwise a
    multistart coordinate descent gives an upper bound flagged ``exact=False``.
    """
    L = _matrix(L)
    n = L.shape[0]
    lo, hi = float(lo), float(hi)
    if not lo < hi:
        raise ValidationError("BAD_CODOMAIN", "interval needs lo < hi")
    if lo <= 0.0 <= hi and is_psd_matrix(L, tol.psd_tol):
        return GapResult(0.0, np.zeros(n), GapMethod.ANALYTIC, True, "PSD and 0 in E")
    if np.all(np.diag(L) <= 0):
        val, z = enumerate_min((lo, hi), n, _quad_rows(L), budget, _tie_tol(L, (lo, hi)))
        return GapResult(val, z, GapMethod.VERTEX_SEARCH, True)

    rng = np.random.default_rng(seed)
    starts = list(next(grid_chunks((lo, hi), n, chunk=64)))
    starts.extend(rng.uniform(lo, hi, size=(32, n)))
    best_val, best_z = math.inf, None
    for s in starts:
        z = _coordinate_descent(L, np.array(s, dtype=float), lo, hi)
        v = float(z @ L @ z)
        if v < best_val - 1e-14:
            best_val, best_z = v, z
    return GapResult(best_val, best_z, GapMethod.HEURISTIC_BOUND, False, "upper bound from local search")


# ---------------------------------------------------------------------------
# integer gaps
# ---------------------------------------------------------------------------


def _integer_key(z) -> tuple:
    return tuple(canonical_order_key(float(v)) for v in z)


def gamma_gap_integer(L, reading: IntegerGapReading = IntegerGapReading.LATTICE_NONZERO,
                      tol: Tolerances = DEFAULT_TOL, max_candidates: int = LATTICE_BUDGET) -> GapResult:
    """Exact minimum of z L z^T over nonzero integer vectors (Fincke-Pohst enumeration).

    ``LATTICE_NONZERO`` excludes only z = 0 (shortest lattice vector);
    ``COMPONENTWISE_NONZERO`` requires every coordinate to be nonzero, which
    is the literal gap over (Z minus {0})^n.
    """
    L = _matrix(L)
    n = L.shape[0]
    if n > 12:
        raise BudgetExceeded("DIMENSION", f"integer gap limited to n <= 12, got {n}")
    evals = np.linalg.eigvalsh(L)
    if evals[0] <= tol.psd_tol:
        raise ValidationError("NOT_POSITIVE_DEFINITE",
                              f"min eigenvalue {evals[0]:.3g}; the gap is -inf when it is negative")
    componentwise = reading is IntegerGapReading.COMPONENTWISE_NONZERO

    ones = np.ones(n)
    bound = float(ones @ L @ ones)
    if componentwise and n <= 16:
        signs = next(grid_chunks((1.0, -1.0), n, chunk=1 << n))
        bound = min(bound, float(np.min(np.einsum("ij,ij->i", signs @ L, signs))))
    elif not componentwise:
        bound = min(bound, float(np.min(np.diag(L))))
    tie = 1e-12 * max(1.0, bound)

    inv_diag = np.diag(np.linalg.inv(L))
    radius = np.floor(np.sqrt(np.maximum(bound * inv_diag, 0.0)) + 1e-9)
    width = 2 * radius if componentwise else 2 * radius + 1
    if float(np.prod(width)) > max_candidates:
        raise BudgetExceeded("LATTICE_BUDGET", f"box of {float(np.prod(width)):.3g} candidates > {max_candidates}")

    R = np.linalg.cholesky(L).T  # L = R^T R, R upper triangular
    rdiag2 = np.diag(R) ** 2
    mu = R / np.diag(R)[:, None]

    best = [math.inf]
    ties: list[tuple[float, tuple[int, ...]]] = []
    z = np.zeros(n)

    def limit() -> float:
        return min(bound, best[0]) + tie

    def visit(i: int, partial: float) -> None:
        c = -float(mu[i, i + 1:] @ z[i + 1:])
        room = limit() - partial
        if room < 0:
            return
        r = math.sqrt(room / rdiag2[i])
        for t in range(math.ceil(c - r - 1e-12), math.floor(c + r + 1e-12) + 1):
            if componentwise and t == 0:
                continue
            z[i] = t
            p = partial + rdiag2[i] * (t - c) ** 2
            if p > limit():
                continue
            if i == 0:
                if not componentwise and not np.any(z):
                    continue
                v = float(z @ L @ z)
                if v < best[0] - tie:
                    ties[:] = [t_ for t_ in ties if t_[0] <= v + tie]
                best[0] = min(best[0], v)
                if v <= best[0] + tie:
                    ties.append((v, tuple(int(x) for x in z)))
            else:
                visit(i - 1, p)
        z[i] = 0

    visit(n - 1, 0.0)
    ties = [t for t in ties if t[0] <= best[0] + tie]
    if not ties:
        raise RuntimeError("lattice enumeration found no candidate below its own starting bound")
    v, zbest = min(ties, key=lambda t: _integer_key(t[1]))
    return GapResult(best[0], np.array(zbest, dtype=float), GapMethod.LATTICE_ENUM, True, reading.value)


class HermiteBound(NamedTuple):
    value: float
    exact: bool


_HERMITE = {
    1: 1.0,
    2: math.sqrt(4 / 3),
    3: 2 ** (1 / 3),
    4: math.sqrt(2),
    5: 8 ** (1 / 5),
    6: (64 / 3) ** (1 / 6),
    7: 64 ** (1 / 7),
    8: 2.0,
    24: 4.0,
}


def hermite_constant(n: int) -> HermiteBound:
    if n < 1:
        raise ValidationError("BAD_DIMENSION", "n must be >= 1")
    if n in _HERMITE:
        return HermiteBound(_HERMITE[n], True)
    return HermiteBound((2 / math.pi) * math.exp(gammaln(2 + n / 2) * 2 / n), False)


def hermite_bound(n: int, det: float) -> HermiteBound:
    """gamma_n * det^(1/n); ``exact`` is False where only the upper bound on gamma_n is known."""
    if det <= 0:
        raise ValidationError("BAD_DETERMINANT", "det must be positive")
    g = hermite_constant(n)
    return HermiteBound(g.value * det ** (1 / n), g.exact)


# ---------------------------------------------------------------------------
# eta gap
# ---------------------------------------------------------------------------

_SHIFT_INVARIANT = {
    CodomainKind.ALL_REALS: 0.0,
    CodomainKind.INTEGERS: 0.0,
    CodomainKind.NONNEG_REALS: 0.0,
    CodomainKind.NONPOS_REALS: 0.0,
    CodomainKind.NATURALS: 0.0,
    CodomainKind.NONZERO_INTEGERS: 1.0,
}


def laplacian_shift(L) -> np.ndarray:
    """L - Delta with Delta = diag(row sums of L)."""
    L = as_array(L)
    return L - np.diag(L.sum(axis=1))


def eta_gap(L, E: Codomain, tol: Tolerances = DEFAULT_TOL, budget: int = ENUMERATION_BUDGET,
            seed: int = 0) -> GapResult:
    """sup of (1/2) sum_kl L_kl (z_k - z_l)^2 over z in E^n, equal to -gamma(L - Delta, E).

    The returned ``minimizer`` is the maximizing z.
    """
    L = _matrix(L)
    n = L.shape[0]
    if E.kind in _SHIFT_INVARIANT:
        # the increment form ignores constant shifts, so every unbounded set behaves like R
        c = _SHIFT_INVARIANT[E.kind]
        if is_psd_matrix(laplacian_shift(L), tol.psd_tol):
            return GapResult(0.0, np.full(n, c), GapMethod.ANALYTIC, True, "L - Delta PSD")
        return GapResult(Unbounded.POS_INF, None, GapMethod.ANALYTIC, True, "L - Delta not PSD")
    if E.is_finite:
        k_idx, l_idx = np.triu_indices(n, 1)
        w = L[k_idx, l_idx] + L[l_idx, k_idx]
        vals = E.values

        def neg_increments(Z):
            d = Z[:, k_idx] - Z[:, l_idx]
            return -((d * d) @ (w / 2))

        val, z = enumerate_min(vals, n, neg_increments, budget, _tie_tol(L, vals))
        return GapResult(-val + 0.0, z, GapMethod.ENUMERATION, True)
    return gamma_gap(laplacian_shift(L), E, tol, budget, seed=seed).negated()


# ---------------------------------------------------------------------------
# zeta gap
# ---------------------------------------------------------------------------


def _signed_sums(lam: np.ndarray) -> np.ndarray:
    """Sums z . lam for every sign vector, indexed in canonical order (+1 before -1)."""
    m = len(lam)
    if m == 0:
        return np.zeros(1)
    signs = next(grid_chunks((1.0, -1.0), m, chunk=1 << m))
    return signs @ lam


def zeta_gap(lam, budget: int = 30) -> tuple[float, np.ndarray]:
    """min over z in {-1,1}^n of |z . lam| by meet-in-the-middle.

    Returns the value and the first optimal sign vector in canonical order.
    """
    lam = np.asarray(lam, dtype=float).ravel()
    n = len(lam)
    if n == 0:
        raise ValidationError("EMPTY", "zeta gap needs at least one entry")
    if n > budget:
        raise BudgetExceeded("ENUMERATION_BUDGET_EXCEEDED", f"zeta gap limited to n <= {budget}, got {n}")
    h = n // 2
    first, second = lam[:h], lam[h:]
    s1 = _signed_sums(first)
    s2 = _signed_sums(second)
    order = np.argsort(s2, kind="stable")
    sorted2 = s2[order]

    targets = -s1
    pos = np.searchsorted(sorted2, targets)
    lo_i = np.clip(pos - 1, 0, len(sorted2) - 1)
    hi_i = np.clip(pos, 0, len(sorted2) - 1)
    best = float(min(np.min(np.abs(s1 + sorted2[lo_i])), np.min(np.abs(s1 + sorted2[hi_i]))))
    tie = 1e-12 * max(1.0, float(np.abs(lam).sum()))

    sorted_list = sorted2.tolist()
    for i in range(len(s1)):
        a = bisect_left(sorted_list, targets[i] - best - tie)
        b = bisect_right(sorted_list, targets[i] + best + tie)
        if a < b:
            cand = order[a:b]
            ok = cand[np.abs(s1[i] + s2[cand]) <= best + tie]
            if len(ok):
                j = int(ok.min())
                z1 = _sign_vector(i, h)
                z2 = _sign_vector(j, n - h)
                z = np.concatenate([z1, z2])
                return abs(float(z @ lam)), z
    raise RuntimeError("zeta gap search lost its optimum")


def _sign_vector(index: int, m: int) -> np.ndarray:
    bits = [(index >> (m - 1 - k)) & 1 for k in range(m)]
    return np.array([1.0 if b == 0 else -1.0 for b in bits])


# ---------------------------------------------------------------------------
# tensor gaps
# ---------------------------------------------------------------------------

_LETTERS = "abcdefghijklmnop"


def multilinear_rows(T: np.ndarray) -> Callable[[np.ndarray], np.ndarray]:
    q = T.ndim
    idx = _LETTERS[:q]
    spec = idx + "," + ",".join("z" + c for c in idx) + "->z"

    def evaluate(Z: np.ndarray) -> np.ndarray:
        return np.einsum(spec, T, *([Z] * q), optimize=True)

    return evaluate


def multilinear_form(T, z) -> float:
    T = T.entries if isinstance(T, TensorArray) else np.asarray(T, dtype=float)
    return float(multilinear_rows(T)(np.asarray(z, dtype=float)[None, :])[0])


def gamma_gap_tensor(T, E: Codomain, budget: int = TENSOR_BUDGET) -> GapResult:
    """Exact gap of a q-dimensional array over a finite codomain."""
    if not isinstance(T, TensorArray):
        T = TensorArray(np.asarray(T, dtype=float))
    if not E.is_finite:
        raise UnsupportedCombination("UNSUPPORTED_COMBINATION", "tensor gaps need a finite codomain")
    a = T.entries
    vals = E.values
    vmax = max(abs(v) for v in vals)
    tie = 1e-12 * max(1.0, float(np.abs(a).sum()) * vmax**T.order)
    val, z = enumerate_min(vals, T.n, multilinear_rows(a), budget, tie)
    return GapResult(val, z, GapMethod.ENUMERATION, True)
