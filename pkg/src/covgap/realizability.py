"""Verdict engine: classify a candidate covariance, semivariogram or moment tensor.

A verdict is four-valued.  ``NOT_REALIZABLE`` always carries a test matrix
whose gap inequality is strictly violated, with the gap recomputed exactly (or
replaced by a provably valid bound).  ``REALIZABLE`` is only issued where a
complete characterization applies at the given points:

* PSD / CND tests for unbounded codomains,
* a nonnegative factor (or order <= 4) for the half-line,
* membership in the convex hull of the moment matrices of E^n for finite
  codomains, decided by linear programming with the mixture as witness.

Everything else ends in ``NECESSARY_PASSED`` or ``UNKNOWN``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, asdict
from typing import Iterator, NamedTuple

import numpy as np
from scipy.optimize import linprog

from . import cones
from .core import (
    DEFAULT_TOL,
    BudgetExceeded,
    Codomain,
    CodomainKind,
    MatrixKind,
    SymmetricMatrix,
    Tolerances,
    UnsupportedCombination,
    ValidationError,
    inner,
    validate_symmetric,
)
from .gap import (
    IntegerGapReading,
    TensorArray,
    canonical_order_key,
    gamma_gap_integer,
    gamma_gap_tensor,
    grid_chunks,
    zeta_gap,
)


class Status(enum.Enum):
    REALIZABLE = "REALIZABLE"
    NOT_REALIZABLE = "NOT_REALIZABLE"
    NECESSARY_PASSED = "NECESSARY_PASSED"
    UNKNOWN = "UNKNOWN"


@dataclass(frozen=True, eq=False)
class Certificate:
    """A violated gap inequality.

    For covariances and moments ``inner_product < gap``; for semivariograms
    ``inner_product > gap`` (``relation`` records which).  ``gap_exact`` is
    False when ``gap`` is a provable bound rather than the exact gap, which
    still makes the violation valid.
    """

    lam: np.ndarray
    gap: float
    inner_product: float
    family: str
    relation: str = "<"
    gap_exact: bool = True

    @property
    def margin(self) -> float:
        d = self.gap - self.inner_product
        return d if self.relation == "<" else -d

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam.tolist(),
            "gap": self.gap,
            "inner_product": self.inner_product,
            "family": self.family,
            "relation": self.relation,
            "gap_exact": self.gap_exact,
        }


@dataclass(frozen=True, eq=False)
class Verdict:
    status: Status
    theorem_tag: str
    certificate: Certificate | None = None
    details: dict = field(default_factory=dict)
    notes: tuple[str, ...] = ()
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "theorem_tag": self.theorem_tag,
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "details": _jsonable(self.details),
            "notes": list(self.notes),
            "config": self.config,
        }


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    return x


@dataclass(frozen=True)
class RealizabilityConfig:
    tol: Tolerances = DEFAULT_TOL
    hadamard: bool = True
    rank1_support: int = 3
    random_tests: int = 500
    random_entry_bound: int = 3
    hypermetric_support: int = 7
    hull_budget: int = 4096
    enumeration_budget: int = 2**24
    work_budget: float = 2e9
    integer_tests: int = 60
    moment_tests: int = 200
    seed: int = 0
    cp: cones.CPConfig = cones.CPConfig()

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


DEFAULT_CONFIG = RealizabilityConfig()


# ---------------------------------------------------------------------------
# test families
# ---------------------------------------------------------------------------


class HadamardTest(NamedTuple):
    u: int
    v: int
    matrix: np.ndarray
    bound: int


def _popcount(x: int) -> int:
    return bin(x).count("1")


def hadamard_test_family(n: int) -> list[HadamardTest]:
    """Walsh-Hadamard test arrays with their exact gaps on {-1,1}.

    Entry (k, l) of the (u, v) array is (-1)^(popcount(k&u) + popcount(l&v))
    with 1-based indices.  Its gap is parity(n - q) - q^2 where q counts the
    indices i with popcount((u xor v) & i) odd.
    """
    if not 1 <= n <= 16:
        raise ValidationError("BAD_DIMENSION", "Hadamard family defined for 1 <= n <= 16")
    idx = np.arange(1, n + 1)
    out = []
    for u in range(1, n + 1):
        su = np.array([(-1.0) ** _popcount(int(k) & u) for k in idx])
        for v in range(1, n + 1):
            sv = np.array([(-1.0) ** _popcount(int(k) & v) for k in idx])
            q = sum(_popcount((u ^ v) & i) % 2 for i in range(1, n + 1))
            bound = (n - q) % 2 - q * q
            out.append(HadamardTest(u, v, np.outer(su, sv), bound))
    return out


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _rank1_vectors(n: int, max_support: int) -> Iterator[np.ndarray]:
    for s in range(1, min(max_support, n) + 1):
        for support in itertools.combinations(range(n), s):
            for signs in itertools.product((1.0, -1.0), repeat=s):
                if signs[0] < 0:
                    continue  # lam and -lam give the same test matrix
                lam = np.zeros(n)
                lam[list(support)] = signs
                yield lam


def _random_integer_symmetric(n: int, count: int, bound: int, rng: np.random.Generator,
                              zero_diagonal: bool = False) -> Iterator[np.ndarray]:
    for _ in range(count):
        a = rng.integers(-bound, bound + 1, size=(n, n)).astype(float)
        a = np.triu(a) + np.triu(a, 1).T
        if zero_diagonal:
            np.fill_diagonal(a, 0.0)
        yield a


# ---------------------------------------------------------------------------
# exact gaps for batches of test matrices
# ---------------------------------------------------------------------------


def batch_gamma(lams: np.ndarray, values: tuple[float, ...], budget: int = 2**24) -> np.ndarray:
    """Exact gamma gaps over values^n for a stack of K test matrices (K x n x n)."""
    K, n, _ = lams.shape
    if len(values) ** n > budget:
        raise BudgetExceeded("ENUMERATION_BUDGET_EXCEEDED", f"{len(values)}^{n} > {budget}")
    flat = lams.reshape(K, n * n).T
    best = np.full(K, np.inf)
    for Z in grid_chunks(tuple(sorted(values, key=canonical_order_key)), n, chunk=1 << 12):
        outer = np.einsum("ik,il->ikl", Z, Z).reshape(len(Z), n * n)
        best = np.minimum(best, (outer @ flat).min(axis=0))
    return best


def batch_eta(lams: np.ndarray, values: tuple[float, ...], budget: int = 2**24) -> np.ndarray:
    """Exact eta gaps over values^n for a stack of K test matrices."""
    K, n, _ = lams.shape
    if len(values) ** n > budget:
        raise BudgetExceeded("ENUMERATION_BUDGET_EXCEEDED", f"{len(values)}^{n} > {budget}")
    flat = lams.reshape(K, n * n).T
    best = np.full(K, -np.inf)
    for Z in grid_chunks(tuple(values), n, chunk=1 << 12):
        d = Z[:, :, None] - Z[:, None, :]
        inc = (0.5 * d * d).reshape(len(Z), n * n)
        best = np.maximum(best, (inc @ flat).max(axis=0))
    return best


def _interval_square_range(lo: float, hi: float) -> tuple[float, float]:
    sq_min = 0.0 if lo <= 0 <= hi else min(lo * lo, hi * hi)
    return sq_min, max(lo * lo, hi * hi)


def batch_gamma_lower(lams: np.ndarray, lo: float, hi: float, budget: int = 2**24) -> tuple[np.ndarray, np.ndarray]:
    """Valid lower bounds on gamma over [lo,hi]^n, and whether each is exact.

    The zero-diagonal part is coordinatewise affine, so its box minimum is a
    vertex minimum; the diagonal is bounded termwise.
    """
    diag = np.einsum("kii->ki", lams)
    off = lams.copy()
    idx = np.arange(lams.shape[1])
    off[:, idx, idx] = 0.0
    base = batch_gamma(off, (lo, hi), budget)
    sq_min, sq_max = _interval_square_range(lo, hi)
    corr = np.where(diag >= 0, diag * sq_min, diag * sq_max).sum(axis=1)
    exact = np.all(diag == 0, axis=1)
    return base + corr, exact


# ---------------------------------------------------------------------------
# convex hull linear programs
# ---------------------------------------------------------------------------


def _vertex_matrices(values: tuple[float, ...], n: int, kind: str) -> tuple[np.ndarray, np.ndarray]:
    Z = next(grid_chunks(tuple(values), n, chunk=len(values) ** n))
    if kind == "cov":
        V = np.einsum("ik,il->ikl", Z, Z)
    else:
        d = Z[:, :, None] - Z[:, None, :]
        V = 0.5 * d * d
    return Z, V


class HullResult(NamedTuple):
    member: bool | None
    lam: np.ndarray | None
    bound: float | None
    weights: np.ndarray | None
    support: np.ndarray | None
    residual: float | None


def hull_membership(M: np.ndarray, values: tuple[float, ...], kind: str = "cov",
                    include_diagonal: bool = True, tol: float = 1e-9) -> HullResult:
    """Decide whether M lies in conv{V_z : z in values^n}.

    ``V_z`` is z z^T (``kind='cov'``) or [(z_k - z_l)^2 / 2] (``'vario'``).
    With ``include_diagonal=False`` only off-diagonal entries are matched.
    Returns a separating matrix L with <L, M> < min_z <L, V_z> when M is
    outside, else mixture weights over the support points.
    """
    n = M.shape[0]
    Z, V = _vertex_matrices(values, n, kind)
    rows, cols = np.triu_indices(n, 0 if include_diagonal else 1)
    w = np.where(rows == cols, 1.0, 2.0)
    A = V[:, rows, cols] * w  # <L, V_z> as a function of the upper-triangular entries of L
    m_vec = M[rows, cols] * w
    N, P = A.shape

    # separation: minimize <L, M> - t  s.t.  t - <L, V_z> <= 0, entries of L in [-1, 1]
    c = np.concatenate([m_vec, [-1.0]])
    A_ub = np.hstack([-A, np.ones((N, 1))])
    res = linprog(c, A_ub=A_ub, b_ub=np.zeros(N), bounds=[(-1, 1)] * P + [(None, None)], method="highs")
    if res.status == 0 and -res.fun > tol:
        L = np.zeros((n, n))
        L[rows, cols] = res.x[:P]
        L[cols, rows] = res.x[:P]
        return HullResult(False, L, float(res.x[P]), None, None, None)

    # primal: mixture weights with L1 slack
    scale = max(1.0, float(np.abs(M).max()))
    Vp = V[:, rows, cols].T  # P x N
    A_eq = np.vstack([np.hstack([Vp, np.eye(P), -np.eye(P)]),
                      np.concatenate([np.ones(N), np.zeros(2 * P)])[None, :]])
    b_eq = np.concatenate([M[rows, cols], [1.0]])
    c2 = np.concatenate([np.zeros(N), np.ones(2 * P)])
    res2 = linprog(c2, A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * (N + 2 * P), method="highs")
    if res2.status != 0:
        return HullResult(None, None, None, None, None, None)
    p = np.clip(res2.x[:N], 0.0, None)
    p /= p.sum()
    resid = float(np.abs(np.einsum("i,ikl->kl", p, V)[rows, cols] - M[rows, cols]).max())
    keep = p > 1e-12
    member = resid <= 1e-7 * scale
    return HullResult(member if member else None, None, None, p[keep], Z[keep], resid)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _cov_cert(lam, gap, ip, family, exact=True) -> Certificate:
    return Certificate(np.asarray(lam, dtype=float), float(gap), float(ip), family, "<", exact)


def _vario_cert(lam, eta, ip, family, exact=True) -> Certificate:
    return Certificate(np.asarray(lam, dtype=float), float(eta), float(ip), family, ">", exact)


def _elementary(n: int, k: int, l: int, sign: float) -> np.ndarray:
    E = np.zeros((n, n))
    E[k, l] += sign
    if k != l:
        E[l, k] += sign
    return E


def _product_range(E: Codomain) -> tuple[float, float, float, float]:
    """(min v^2, max v^2, min v w, max v w) over the codomain."""
    if E.is_finite:
        vals = np.array(E.values)
        sq = vals * vals
        prod = np.outer(vals, vals)
        return float(sq.min()), float(sq.max()), float(prod.min()), float(prod.max())
    lo, hi = E.params
    sq_min, sq_max = _interval_square_range(lo, hi)
    prods = [lo * lo, lo * hi, hi * hi]
    return sq_min, sq_max, min(prods), max(prods)


def _elementary_battery(R: np.ndarray, E: Codomain, tol: Tolerances) -> Certificate | None:
    """Entrywise range conditions, each an exact gap inequality with a one- or two-entry test matrix."""
    n = R.shape[0]
    sq_min, sq_max, p_min, p_max = _product_range(E)
    for k in range(n):
        if R[k, k] < sq_min - tol.gap_tol:
            return _cov_cert(_elementary(n, k, k, 1.0), sq_min, R[k, k], "elementary")
        if R[k, k] > sq_max + tol.gap_tol:
            return _cov_cert(_elementary(n, k, k, -1.0), -sq_max, -R[k, k], "elementary")
    for k, l in itertools.combinations(range(n), 2):
        if R[k, l] < p_min - tol.gap_tol:
            return _cov_cert(_elementary(n, k, l, 1.0), 2 * p_min, 2 * R[k, l], "elementary")
        if R[k, l] > p_max + tol.gap_tol:
            return _cov_cert(_elementary(n, k, l, -1.0), -2 * p_max, -2 * R[k, l], "elementary")
    return None


def _psd_battery(R: np.ndarray, E: Codomain, tol: Tolerances, budget: int) -> Certificate | None:
    v = cones.is_psd(R, tol)
    if v.member:
        return None
    lam = v.certificate
    L = np.outer(lam, lam)
    ip = inner(L, R)
    if E.kind is CodomainKind.TWO_POINT and E.params == (-1.0, 1.0) and len(lam) <= 30:
        z, _ = zeta_gap(lam)
        return _cov_cert(L, z * z, ip, "psd_rank_one")
    if E.is_finite and len(E.values) ** len(lam) <= budget:
        g = float(batch_gamma(L[None], E.values, budget)[0])
        return _cov_cert(L, g, ip, "psd_rank_one")
    return _cov_cert(L, 0.0, ip, "psd_rank_one", exact=False)


def _status_from(cert: Certificate | None) -> Status:
    return Status.NOT_REALIZABLE if cert is not None else Status.NECESSARY_PASSED


# ---------------------------------------------------------------------------
# gap inequality search
# ---------------------------------------------------------------------------


def _family_stream(n: int, E: Codomain, config: RealizabilityConfig, seed: int,
                   zero_diagonal: bool = False) -> Iterator[tuple[str, np.ndarray, float | None]]:
    """Test matrices in deterministic order, with a closed-form gap where one is known."""
    unit = E.kind is CodomainKind.TWO_POINT and E.params == (-1.0, 1.0)
    if config.hadamard and n <= 16 and not zero_diagonal:
        for t in hadamard_test_family(n):
            yield "hadamard", _sym(t.matrix), float(t.bound) if unit else None
    for lam in _rank1_vectors(n, config.rank1_support):
        L = np.outer(lam, lam)
        if zero_diagonal:
            np.fill_diagonal(L, 0.0)
            yield "rank_one", L, None
        elif unit:
            z, _ = zeta_gap(lam)
            yield "rank_one", L, z * z
        else:
            yield "rank_one", L, None
    rng = np.random.default_rng(seed)
    for L in _random_integer_symmetric(n, config.random_tests, config.random_entry_bound, rng, zero_diagonal):
        yield "random_integer", L, None


def gap_inequality_search(M, E: Codomain, config: RealizabilityConfig = DEFAULT_CONFIG,
                          seed: int | None = None, batch: int = 256) -> Certificate | None:
    """Scan a fixed family of test matrices for a violated covariance gap inequality.

    Works for finite codomains (exact gaps by enumeration) and closed intervals
    (vertex lower bounds).  Returns the first violation in family order.
    """
    M = M.entries if isinstance(M, SymmetricMatrix) else np.asarray(M, dtype=float)
    n = M.shape[0]
    tol = config.tol
    seed = config.seed if seed is None else seed
    if not (E.is_finite or E.kind is CodomainKind.CLOSED_INTERVAL):
        raise UnsupportedCombination("UNSUPPORTED_COMBINATION", "gap search needs a finite set or an interval")
    values = E.values if E.is_finite else E.params
    per_test = (len(values) ** n) * n * n
    max_tests = max(1, int(config.work_budget // max(per_test, 1)))

    pending: list[tuple[str, np.ndarray, float | None]] = []
    seen = 0

    def flush() -> Certificate | None:
        need = [i for i, (_, _, g) in enumerate(pending) if g is None]
        gaps = [g for _, _, g in pending]
        exact = [True] * len(pending)
        if need:
            stack = np.stack([pending[i][1] for i in need])
            if E.is_finite:
                vals = batch_gamma(stack, values, config.enumeration_budget)
                ex = np.ones(len(need), dtype=bool)
            else:
                vals, ex = batch_gamma_lower(stack, *values, config.enumeration_budget)
            for j, i in enumerate(need):
                gaps[i] = float(vals[j])
                exact[i] = bool(ex[j])
        for (family, L, _), g, ex in zip(pending, gaps, exact):
            ip = inner(L, M)
            if ip < g - tol.gap_tol:
                return _cov_cert(L, g, ip, family, ex)
        pending.clear()
        return None

    for item in _family_stream(n, E, config, seed):
        if seen >= max_tests:
            break
        pending.append(item)
        seen += 1
        if len(pending) >= batch:
            cert = flush()
            if cert is not None:
                return cert
    return flush() if pending else None


def revalidate(cert: Certificate, M, E: Codomain, budget: int = 2**24) -> bool:
    """Recompute the gap of a certificate from scratch and confirm the strict violation."""
    from .gap import eta_gap, gamma_gap

    M = M.entries if isinstance(M, SymmetricMatrix) else np.asarray(M, dtype=float)
    L = cert.lam
    if L.ndim > 2:
        g = gamma_gap_tensor(TensorArray(L), E, budget).value
        return float(np.sum(L * M)) < g
    ip = inner(L, M)
    if cert.relation == ">":
        if not cert.gap_exact:
            return ip > cert.gap
        e = eta_gap(_sym(L), E, budget=budget)
        return e.is_finite and ip > e.value
    if not cert.gap_exact:
        return ip < cert.gap
    g = gamma_gap(_sym(L), E, budget=budget)
    return g.is_finite and g.exact and ip < g.value


# ---------------------------------------------------------------------------
# covariance
# ---------------------------------------------------------------------------


def _as_matrix(R, kind: MatrixKind, tol: Tolerances) -> np.ndarray:
    if isinstance(R, SymmetricMatrix):
        R = R.entries
    return validate_symmetric(R, kind, tol).entries


def _hull_verdict(M: np.ndarray, values: tuple[float, ...], kind: str, tag: str, tol: Tolerances,
                  notes: list[str], cfg: dict) -> Verdict | None:
    res = hull_membership(M, values, kind, tol=tol.gap_tol)
    if res.member is False:
        L = res.lam
        if kind == "cov":
            g = float(batch_gamma(L[None], values)[0])
            ip = inner(L, M)
            if ip < g - tol.gap_tol:
                return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, g, ip, "hull_separation"),
                               notes=tuple(notes), config=cfg)
        else:
            Lv = -L
            np.fill_diagonal(Lv, 0.0)
            eta = float(batch_eta(Lv[None], values)[0])
            ip = inner(Lv, M)
            if ip > eta + tol.gap_tol:
                return Verdict(Status.NOT_REALIZABLE, tag, _vario_cert(Lv, eta, ip, "hull_separation"),
                               notes=tuple(notes), config=cfg)
        notes.append("hull separation below tolerance after exact recomputation")
        return None
    if res.member:
        details = {"mixture_support": res.support, "mixture_weights": res.weights, "residual": res.residual}
        return Verdict(Status.REALIZABLE, tag, None, details, tuple(notes), cfg)
    notes.append("hull LP inconclusive")
    return None


def check_covariance(R, E: Codomain, config: RealizabilityConfig = DEFAULT_CONFIG) -> Verdict:
    """Classify R as the non-centered covariance of an E-valued random field at n points."""
    tol = config.tol
    M = _as_matrix(R, MatrixKind.COVARIANCE, tol)
    n = M.shape[0]
    cfg = {"codomain": E.render(), **_jsonable(config.to_dict())}
    k = E.kind
    notes: list[str] = []

    if k in (CodomainKind.ALL_REALS, CodomainKind.INTEGERS):
        v = cones.is_psd(M, tol)
        tag = "PSD characterization (real or integer codomain)"
        if v.member:
            return Verdict(Status.REALIZABLE, tag, config=cfg)
        L = np.outer(v.certificate, v.certificate)
        return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, 0.0, inner(L, M), "psd_rank_one"), config=cfg)

    if k in (CodomainKind.NONNEG_REALS, CodomainKind.NONPOS_REALS, CodomainKind.NATURALS):
        return _check_half_line(M, config, cfg)

    if k is CodomainKind.NONZERO_INTEGERS:
        return _check_nonzero_integers(M, config, cfg)

    if k is CodomainKind.CLOSED_INTERVAL:
        return _check_interval(M, E, config, cfg)

    # finite codomains
    values = E.values
    unit = k is CodomainKind.TWO_POINT and values[0] == -values[1]
    if unit:
        a = values[1]
        M = M / (a * a)
        E = Codomain.two_point(-1, 1)
        values = E.values
        if a != 1:
            notes.append(f"rescaled by 1/{a}^2 onto {{-1,1}}")
    tag = "unit-process covariance (corner positivity)" if unit else "gap inequalities over a finite codomain"
    cert = _elementary_battery(M, E, tol) or _psd_battery(M, E, tol, config.enumeration_budget)
    if cert is None:
        try:
            cert = gap_inequality_search(M, E, config)
        except BudgetExceeded as exc:
            notes.append(f"gap search skipped: {exc.message}")
    if cert is not None:
        return Verdict(Status.NOT_REALIZABLE, tag, _unscale(cert, values, E, unit, a if unit else 1.0),
                       notes=tuple(notes), config=cfg)
    if len(values) ** n <= config.hull_budget:
        v = _hull_verdict(M, values, "cov", tag + "; convex hull LP", tol, notes, cfg)
        if v is not None:
            if v.certificate is not None and unit:
                v = Verdict(v.status, v.theorem_tag, _unscale(v.certificate, values, E, True, a),
                            v.details, v.notes, v.config)
            return v
    else:
        notes.append(f"hull LP skipped: {len(values)}^{n} vertices > {config.hull_budget}")
    return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)


def _unscale(cert: Certificate, values, E, unit: bool, a: float) -> Certificate:
    """Map a certificate found for R / a^2 on {-1,1} back to R on {-a,a}."""
    if not unit or a == 1.0:
        return cert
    s = a * a
    return Certificate(cert.lam, cert.gap * s, cert.inner_product * s, cert.family, cert.relation, cert.gap_exact)


def _check_half_line(M: np.ndarray, config: RealizabilityConfig, cfg: dict) -> Verdict:
    tol = config.tol
    n = M.shape[0]
    tag = "complete positivity (half-line codomain)"
    try:
        B = cones.cp_factorize(M, tol, config.cp, seed=config.seed)
    except cones.NotDoublyNonnegative as exc:
        cert_vec = exc.certificate
        L = cert_vec if cert_vec.ndim == 2 else np.outer(cert_vec, cert_vec)
        return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, 0.0, inner(L, M), "copositive_" + (
            "elementary" if cert_vec.ndim == 2 else "psd")), config=cfg)
    if B is not None:
        return Verdict(Status.REALIZABLE, tag, details={"factor": B}, config=cfg)
    if n <= 4:
        return Verdict(Status.REALIZABLE, "doubly nonnegative of order <= 4 is completely positive",
                       notes=("factor search did not converge",), config=cfg)
    w = cones.cp_refute(M, tol)
    if w is not None:
        return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(w.matrix, 0.0, w.inner_product, "copositive_" + w.family),
                       config=cfg)
    return Verdict(Status.UNKNOWN, tag, notes=("no factor and no copositive witness found",), config=cfg)


def _random_pd_integer(n: int, count: int, rng: np.random.Generator) -> Iterator[np.ndarray]:
    for _ in range(count):
        B = rng.integers(-1, 2, size=(n, n)).astype(float)
        yield B @ B.T + np.eye(n)


def _check_nonzero_integers(M: np.ndarray, config: RealizabilityConfig, cfg: dict) -> Verdict:
    tol = config.tol
    n = M.shape[0]
    tag = "gap inequalities over nonzero integers (necessary battery)"
    notes = []
    for k in range(n):
        if M[k, k] < 1 - tol.gap_tol:
            E = _elementary(n, k, k, 1.0)
            return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(E, 1.0, M[k, k], "elementary"), config=cfg)
    v = cones.is_psd(M, tol)
    if not v.member:
        L = np.outer(v.certificate, v.certificate)
        return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, 0.0, inner(L, M), "psd_rank_one", exact=False),
                       config=cfg)
    if n > 12:
        notes.append("lattice tests skipped for n > 12")
        return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)
    rng = np.random.default_rng(config.seed)
    tests = [np.eye(n)] + list(_random_pd_integer(n, config.integer_tests, rng))
    for L in tests:
        try:
            g = gamma_gap_integer(L, IntegerGapReading.COMPONENTWISE_NONZERO, tol)
        except BudgetExceeded:
            notes.append("a lattice test exceeded its budget and was skipped")
            continue
        ip = inner(L, M)
        if ip < g.value - tol.gap_tol:
            return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, g.value, ip, "pd_integer"), notes=tuple(notes),
                           config=cfg)
    return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)


def _check_interval(M: np.ndarray, E: Codomain, config: RealizabilityConfig, cfg: dict) -> Verdict:
    tol = config.tol
    n = M.shape[0]
    lo, hi = E.params
    tag = "necessary conditions for a closed interval (bounds, PSD, vertex gaps)"
    notes: list[str] = []
    cert = _elementary_battery(M, E, tol)
    if cert is None:
        v = cones.is_psd(M, tol)
        if not v.member:
            L = np.outer(v.certificate, v.certificate)
            cert = _cov_cert(L, 0.0, inner(L, M), "psd_rank_one", exact=False)
    if cert is None:
        try:
            cert = gap_inequality_search(M, E, config)
        except BudgetExceeded as exc:
            notes.append(f"gap search skipped: {exc.message}")
    if cert is not None:
        return Verdict(Status.NOT_REALIZABLE, tag, cert, notes=tuple(notes), config=cfg)
    if 2**n <= config.hull_budget:
        # zero-diagonal test matrices have the same gap on the box and on its vertices
        res = hull_membership(M, (lo, hi), "cov", include_diagonal=False, tol=tol.gap_tol)
        if res.member is False:
            L = res.lam
            np.fill_diagonal(L, 0.0)
            g = float(batch_gamma(L[None], (lo, hi))[0])
            ip = inner(L, M)
            if ip < g - tol.gap_tol:
                return Verdict(Status.NOT_REALIZABLE, tag + "; vertex hull of off-diagonal part",
                               _cov_cert(L, g, ip, "offdiagonal_hull_separation"), notes=tuple(notes), config=cfg)
    support = tuple(sorted({lo, hi} | ({0.0} if lo <= 0 <= hi else set())))
    if len(support) ** n <= config.hull_budget:
        res = hull_membership(M, support, "cov", tol=tol.gap_tol)
        if res.member:
            details = {"mixture_support": res.support, "mixture_weights": res.weights, "residual": res.residual}
            return Verdict(Status.REALIZABLE, f"finite mixture on {support} inside the interval", None, details,
                           tuple(notes), cfg)
    return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)


# ---------------------------------------------------------------------------
# semivariograms
# ---------------------------------------------------------------------------

_UNBOUNDED = (CodomainKind.ALL_REALS, CodomainKind.INTEGERS, CodomainKind.NONNEG_REALS,
              CodomainKind.NONPOS_REALS, CodomainKind.NATURALS, CodomainKind.NONZERO_INTEGERS)


def _hypermetric_vectors(n: int, max_support: int) -> Iterator[np.ndarray]:
    for s in range(2, min(max_support, n) + 1):
        for support in itertools.combinations(range(n), s):
            for signs in itertools.product((1.0, -1.0), repeat=s):
                if signs[0] < 0:
                    continue
                lam = np.zeros(n)
                lam[list(support)] = signs
                yield lam


def _vario_search(G: np.ndarray, values: tuple[float, ...], config: RealizabilityConfig,
                  nonneg_only: bool = False) -> Certificate | None:
    """Rank-one {-1,0,1} tests (closed-form bound on {-1,1}) then random zero-diagonal tests."""
    tol = config.tol
    n = G.shape[0]
    unit = values == (-1.0, 1.0)
    if unit and not nonneg_only:
        for lam in _hypermetric_vectors(n, config.hypermetric_support):
            L = np.outer(lam, lam)
            np.fill_diagonal(L, 0.0)
            ip = inner(L, G)
            sigma = lam.sum()
            z, _ = zeta_gap(lam)
            bound = sigma * sigma - z * z
            if ip > bound + tol.gap_tol:
                return _vario_cert(L, bound, ip, "hypermetric")
    rng = np.random.default_rng(config.seed)
    tests = list(_random_integer_symmetric(n, config.random_tests, config.random_entry_bound, rng, True))
    if nonneg_only:
        tests = [np.abs(t) for t in tests]
    if not unit and not nonneg_only:
        tests = [np.outer(l, l) * (1 - np.eye(n)) for l in _rank1_vectors(n, config.rank1_support)] + tests
    per_test = (len(values) ** n) * n * n
    tests = tests[: max(1, int(config.work_budget // max(per_test, 1)))]
    for start in range(0, len(tests), 256):
        stack = np.stack(tests[start:start + 256])
        etas = batch_eta(stack, values, config.enumeration_budget)
        for L, eta in zip(stack, etas):
            ip = inner(L, G)
            if ip > eta + tol.gap_tol:
                return _vario_cert(L, eta, ip, "random_zero_diagonal")
    return None


def check_variogram(G, E: Codomain, config: RealizabilityConfig = DEFAULT_CONFIG) -> Verdict:
    """Classify G as the semivariogram of a drift-free E-valued random field at n points."""
    tol = config.tol
    M = _as_matrix(G, MatrixKind.VARIOGRAM, tol)
    n = M.shape[0]
    cfg = {"codomain": E.render(), **_jsonable(config.to_dict())}
    notes: list[str] = []
    if not np.any(M):
        return Verdict(Status.REALIZABLE, "constant field", config=cfg)

    if E.kind in _UNBOUNDED:
        tag = "conditional negative semidefiniteness (unbounded codomain, shift invariant)"
        v = cones.is_cnd(M, tol)
        if v.member:
            return Verdict(Status.REALIZABLE, tag, config=cfg)
        lam = v.certificate
        L = np.outer(lam, lam)
        return Verdict(Status.NOT_REALIZABLE, tag, _vario_cert(L, 0.0, inner(L, M), "zero_sum_rank_one"), config=cfg)

    # bounded codomains: increments are shift invariant and scale quadratically
    if E.is_finite and len(E.values) == 1:
        return Verdict(Status.NOT_REALIZABLE, "single-point codomain",
                       _vario_cert(np.ones((n, n)) - np.eye(n), 0.0, inner(np.ones((n, n)) - np.eye(n), M),
                                   "elementary"), config=cfg)
    if E.kind is CodomainKind.TWO_POINT or E.kind is CodomainKind.CLOSED_INTERVAL:
        lo, hi = E.params
        s = 4.0 / (hi - lo) ** 2
        Mn = M * s
        values = (-1.0, 1.0)
    else:
        s = 1.0
        Mn = M
        values = E.values

    interval = E.kind is CodomainKind.CLOSED_INTERVAL
    if E.kind is CodomainKind.TWO_POINT:
        tag = "unit-process semivariogram gap inequalities"
    elif interval:
        tag = "necessary conditions for a closed interval (range, CND, vertex eta gaps)"
    else:
        tag = "eta-gap inequalities over a finite codomain"

    def rescale(c: Certificate) -> Certificate:
        return Certificate(c.lam, c.gap / s, c.inner_product / s, c.family, c.relation, c.gap_exact)

    # range: 0 <= g <= (max - min)^2 / 2
    span2 = (values[-1] - values[0]) ** 2
    for k, l in itertools.combinations(range(n), 2):
        if Mn[k, l] < -tol.gap_tol:
            L = -_elementary(n, k, l, 1.0)
            return Verdict(Status.NOT_REALIZABLE, tag, rescale(_vario_cert(L, 0.0, -2 * Mn[k, l], "elementary")),
                           config=cfg)
        if Mn[k, l] > span2 / 2 + tol.gap_tol:
            L = _elementary(n, k, l, 1.0)
            return Verdict(Status.NOT_REALIZABLE, tag, rescale(_vario_cert(L, span2, 2 * Mn[k, l], "elementary")),
                           config=cfg)
    v = cones.is_cnd(Mn, tol)
    if not v.member:
        lam = v.certificate
        L = np.outer(lam, lam)
        np.fill_diagonal(L, 0.0)
        # for a zero-sum lam the eta gap over any subset of R is at most 0
        return Verdict(Status.NOT_REALIZABLE, tag,
                       rescale(_vario_cert(L, 0.0, inner(L, Mn), "zero_sum_rank_one", exact=False)), config=cfg)
    try:
        cert = _vario_search(Mn, values, config, nonneg_only=interval)
    except BudgetExceeded as exc:
        cert = None
        notes.append(f"eta search skipped: {exc.message}")
    if cert is not None:
        return Verdict(Status.NOT_REALIZABLE, tag, rescale(cert), notes=tuple(notes), config=cfg)

    if interval:
        support = (-1.0, 0.0, 1.0) if 3**n <= config.hull_budget else (-1.0, 1.0)
        if len(support) ** n <= config.hull_budget:
            res = hull_membership(Mn, support, "vario", include_diagonal=False, tol=tol.gap_tol)
            if res.member:
                lo, hi = E.params
                pts = lo + (res.support + 1.0) * (hi - lo) / 2
                return Verdict(Status.REALIZABLE, "finite mixture inside the interval", None,
                               {"mixture_support": pts, "mixture_weights": res.weights, "residual": res.residual},
                               tuple(notes), cfg)
        return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)

    if len(values) ** n <= config.hull_budget:
        v = _hull_verdict(Mn, values, "vario", tag + "; convex hull LP", tol, notes, cfg)
        if v is not None:
            if v.certificate is not None:
                v = Verdict(v.status, v.theorem_tag, rescale(v.certificate), v.details, v.notes, v.config)
            elif v.status is Status.REALIZABLE and E.kind is CodomainKind.TWO_POINT:
                lo, hi = E.params
                pts = lo + (v.details["mixture_support"] + 1.0) * (hi - lo) / 2
                v = Verdict(v.status, v.theorem_tag, None, {**v.details, "mixture_support": pts}, v.notes, v.config)
            return v
    else:
        notes.append(f"hull LP skipped: {len(values)}^{n} vertices > {config.hull_budget}")
    return Verdict(Status.NECESSARY_PASSED, tag, notes=tuple(notes), config=cfg)


# ---------------------------------------------------------------------------
# higher-order moments
# ---------------------------------------------------------------------------


def check_tensor_symmetry(T: np.ndarray, tol: float = 1e-12) -> None:
    """Invariance under every index permutation (adjacent transpositions generate them all)."""
    q = T.ndim
    scale = max(1.0, float(np.abs(T).max()))
    for i in range(q - 1):
        axes = list(range(q))
        axes[i], axes[i + 1] = axes[i + 1], axes[i]
        if float(np.abs(T - T.transpose(axes)).max()) > tol * scale:
            raise ValidationError("SYMMETRY", f"moment tensor not symmetric under swapping axes {i} and {i + 1}")


def check_moment(T, E: Codomain, config: RealizabilityConfig = DEFAULT_CONFIG) -> Verdict:
    """Necessary battery for a q-th spatial moment over a finite codomain."""
    tol = config.tol
    arr = T.entries if isinstance(T, TensorArray) else TensorArray(np.asarray(T, dtype=float)).entries
    q, n = arr.ndim, arr.shape[0]
    cfg = {"codomain": E.render(), **_jsonable(config.to_dict())}
    if q < 2:
        raise ValidationError("BAD_TENSOR", "moment order must be >= 2")
    check_tensor_symmetry(arr, tol.sym_tol)
    if not E.is_finite:
        raise UnsupportedCombination("UNSUPPORTED_COMBINATION", "moment checks need a finite codomain")
    tag = "q-th moment gap inequalities (necessary battery)"
    values = E.values
    if len(values) ** n > 2**20:
        raise BudgetExceeded("ENUMERATION_BUDGET_EXCEEDED", f"{len(values)}^{n} > 2^20")
    powq = np.array(values) ** q
    for k in range(n):
        idx = (k,) * q
        if arr[idx] < powq.min() - tol.gap_tol:
            L = np.zeros_like(arr)
            L[idx] = 1.0
            return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, powq.min(), arr[idx], "elementary"), config=cfg)
        if arr[idx] > powq.max() + tol.gap_tol:
            L = np.zeros_like(arr)
            L[idx] = -1.0
            return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, -powq.max(), -arr[idx], "elementary"), config=cfg)
    rng = np.random.default_rng(config.seed)
    tests = rng.integers(-1, 2, size=(config.moment_tests,) + arr.shape).astype(float)
    flat = tests.reshape(len(tests), -1)
    ips = flat @ arr.ravel()
    best = np.full(len(tests), np.inf)
    for Z in grid_chunks(tuple(sorted(values, key=canonical_order_key)), n, chunk=1 << 12):
        # all z^{(x) q} for the chunk, flattened, against every test array
        outer = Z
        for _ in range(q - 1):
            outer = np.einsum("ia,ib->iab", outer.reshape(len(Z), -1), Z).reshape(len(Z), -1)
        best = np.minimum(best, (outer @ flat.T).min(axis=0))
    for L, g, ip in zip(tests, best, ips):
        if ip < g - tol.gap_tol:
            return Verdict(Status.NOT_REALIZABLE, tag, _cov_cert(L, g, ip, "random_ternary"), config=cfg)
    return Verdict(Status.NECESSARY_PASSED, tag, config=cfg)
