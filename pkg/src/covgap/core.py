"""Validated domain types shared by every other module.

Matrices are wrapped in :class:`SymmetricMatrix`, destination sets in
:class:`Codomain`, and gap values in :class:`GapResult`.  Everything here is
immutable once constructed.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


class CovgapError(Exception):
    """Base error carrying a short machine-readable code."""

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}")


class ValidationError(CovgapError):
    pass


class BudgetExceeded(CovgapError):
    pass


class UnsupportedCombination(CovgapError):
    pass


class CodomainSyntaxError(ValidationError):
    def __init__(self, text: str, position: int, message: str):
        self.text = text
        self.position = position
        super().__init__("CODOMAIN_SYNTAX", f"{message} at position {position} in {text!r}")


# ---------------------------------------------------------------------------
# Tolerances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Tolerances:
    sym_tol: float = 1e-12
    psd_tol: float = 1e-9
    gap_tol: float = 1e-9
    mc_sigmas: float = 4.0

    def __post_init__(self):
        for name in ("sym_tol", "psd_tol", "gap_tol", "mc_sigmas"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError("BAD_TOLERANCE", f"{name} must be finite and > 0, got {value!r}")

    def to_dict(self) -> dict:
        return {
            "sym_tol": self.sym_tol,
            "psd_tol": self.psd_tol,
            "gap_tol": self.gap_tol,
            "mc_sigmas": self.mc_sigmas,
        }


DEFAULT_TOL = Tolerances()


# ---------------------------------------------------------------------------
# Codomains
# ---------------------------------------------------------------------------


class CodomainKind(enum.Enum):
    ALL_REALS = "AllReals"
    NONNEG_REALS = "NonNegReals"
    NONPOS_REALS = "NonPosReals"
    INTEGERS = "Integers"
    NONZERO_INTEGERS = "NonzeroIntegers"
    NATURALS = "Naturals"
    TWO_POINT = "TwoPoint"
    CLOSED_INTERVAL = "ClosedInterval"
    FINITE_SET = "FiniteSet"


def _fmt_number(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def canonical_order_key(v: float) -> tuple[float, bool]:
    """Sort key used for tie-breaking: smaller magnitude first, positive before negative."""
    return (abs(v), v < 0)


@dataclass(frozen=True)
class Codomain:
    """A closed subset of the real line in one of the supported shapes."""

    kind: CodomainKind
    params: tuple[float, ...] = ()

    def __post_init__(self):
        k, p = self.kind, self.params
        if any(not math.isfinite(x) for x in p):
            raise ValidationError("NON_FINITE", f"codomain parameters must be finite: {p}")
        if k is CodomainKind.TWO_POINT:
            if len(p) != 2 or p[0] == p[1]:
                raise ValidationError("BAD_CODOMAIN", "TwoPoint needs two distinct values")
            if p[0] > p[1]:
                object.__setattr__(self, "params", (p[1], p[0]))
        elif k is CodomainKind.CLOSED_INTERVAL:
            if len(p) != 2 or not p[0] < p[1]:
                raise ValidationError("BAD_CODOMAIN", "ClosedInterval needs lo < hi")
        elif k is CodomainKind.FINITE_SET:
            if len(p) == 0:
                raise ValidationError("EMPTY_SET", "finite codomain must be nonempty")
            if any(b <= a for a, b in zip(p, p[1:])):
                raise ValidationError("BAD_CODOMAIN", "finite set values must be strictly increasing")
            if len(p) == 2:
                object.__setattr__(self, "kind", CodomainKind.TWO_POINT)
        elif p:
            raise ValidationError("BAD_CODOMAIN", f"{k.value} takes no parameters")

    # constructors ---------------------------------------------------------
    @classmethod
    def reals(cls) -> Codomain:
        return cls(CodomainKind.ALL_REALS)

    @classmethod
    def nonneg_reals(cls) -> Codomain:
        return cls(CodomainKind.NONNEG_REALS)

    @classmethod
    def integers(cls) -> Codomain:
        return cls(CodomainKind.INTEGERS)

    @classmethod
    def nonzero_integers(cls) -> Codomain:
        return cls(CodomainKind.NONZERO_INTEGERS)

    @classmethod
    def two_point(cls, a: float, b: float) -> Codomain:
        return cls(CodomainKind.TWO_POINT, (float(a), float(b)))

    @classmethod
    def interval(cls, lo: float, hi: float) -> Codomain:
        return cls(CodomainKind.CLOSED_INTERVAL, (float(lo), float(hi)))

    @classmethod
    def finite(cls, values: Iterable[float]) -> Codomain:
        vals = sorted({float(v) for v in values})
        return cls(CodomainKind.FINITE_SET, tuple(vals))

    # queries --------------------------------------------------------------
    def is_closed(self) -> bool:
        return True

    @property
    def is_finite(self) -> bool:
        return self.kind in (CodomainKind.TWO_POINT, CodomainKind.FINITE_SET)

    @property
    def is_bounded(self) -> bool:
        return self.is_finite or self.kind is CodomainKind.CLOSED_INTERVAL

    @property
    def values(self) -> tuple[float, ...]:
        """Elements of a finite codomain in increasing order."""
        if not self.is_finite:
            raise UnsupportedCombination("NOT_FINITE", f"{self.render()} is not a finite set")
        return self.params

    @property
    def canonical_values(self) -> tuple[float, ...]:
        return tuple(sorted(self.values, key=canonical_order_key))

    def contains(self, x: float) -> bool:
        k = self.kind
        if k is CodomainKind.ALL_REALS:
            return math.isfinite(x)
        if k is CodomainKind.NONNEG_REALS:
            return x >= 0
        if k is CodomainKind.NONPOS_REALS:
            return x <= 0
        if k is CodomainKind.INTEGERS:
            return float(x).is_integer()
        if k is CodomainKind.NONZERO_INTEGERS:
            return float(x).is_integer() and x != 0
        if k is CodomainKind.NATURALS:
            return float(x).is_integer() and x >= 0
        if k is CodomainKind.CLOSED_INTERVAL:
            return self.params[0] <= x <= self.params[1]
        return x in self.params

    def negated(self) -> Codomain:
        """The reflection of the set through the origin."""
        k = self.kind
        if k is CodomainKind.NONNEG_REALS:
            return Codomain(CodomainKind.NONPOS_REALS)
        if k is CodomainKind.NONPOS_REALS:
            return Codomain(CodomainKind.NONNEG_REALS)
        if k is CodomainKind.NATURALS:
            raise UnsupportedCombination("UNREPRESENTABLE", "the reflection of N is not representable")
        if k is CodomainKind.CLOSED_INTERVAL:
            return Codomain.interval(-self.params[1], -self.params[0])
        if self.is_finite:
            return Codomain.finite(-v for v in self.params)
        return self

    def scaled(self, a: float) -> Codomain:
        if a == 0:
            return Codomain.finite([0.0])
        if self.is_finite:
            return Codomain.finite(a * v for v in self.params)
        if self.kind is CodomainKind.CLOSED_INTERVAL:
            lo, hi = sorted((a * self.params[0], a * self.params[1]))
            return Codomain.interval(lo, hi)
        if self.kind in (CodomainKind.ALL_REALS,):
            return self
        raise UnsupportedCombination("UNREPRESENTABLE", f"cannot scale {self.render()}")

    def render(self) -> str:
        k = self.kind
        simple = {
            CodomainKind.ALL_REALS: "R",
            CodomainKind.NONNEG_REALS: "R>=0",
            CodomainKind.NONPOS_REALS: "R<=0",
            CodomainKind.INTEGERS: "Z",
            CodomainKind.NONZERO_INTEGERS: "Z\\0",
            CodomainKind.NATURALS: "N",
        }
        if k in simple:
            return simple[k]
        if k is CodomainKind.CLOSED_INTERVAL:
            return f"[{_fmt_number(self.params[0])},{_fmt_number(self.params[1])}]"
        return "{" + ",".join(_fmt_number(v) for v in self.params) + "}"

    def __str__(self) -> str:
        return self.render()


_KEYWORDS = {
    "R": CodomainKind.ALL_REALS,
    "R>=0": CodomainKind.NONNEG_REALS,
    "R<=0": CodomainKind.NONPOS_REALS,
    "Z": CodomainKind.INTEGERS,
    "Z\\0": CodomainKind.NONZERO_INTEGERS,
    "Z\\\\0": CodomainKind.NONZERO_INTEGERS,
    "N": CodomainKind.NATURALS,
}

_NUMBER = re.compile(r"\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*")


def _parse_numbers(text: str, start: int, stop: int) -> list[float]:
    out = []
    pos = start
    while True:
        m = _NUMBER.match(text, pos, stop)
        if m is None:
            raise CodomainSyntaxError(text, pos, "expected a decimal literal")
        value = float(m.group(1))
        if not math.isfinite(value):
            raise CodomainSyntaxError(text, m.start(1), "non-finite literal")
        out.append(value)
        pos = m.end()
        if pos == stop:
            return out
        if text[pos] != ",":
            raise CodomainSyntaxError(text, pos, "expected ','")
        pos += 1


def parse_codomain(spec: str) -> Codomain:
    """Parse the codomain mini-language.

    Accepted forms: ``R``, ``R>=0``, ``R<=0``, ``Z``, ``Z\\0``, ``N``,
    ``{a,b,...}`` and ``[lo,hi]``.  Open intervals are rejected.
    """
    text = spec.strip()
    offset = len(spec) - len(spec.lstrip())
    if text.replace(" ", "") in _KEYWORDS:
        return Codomain(_KEYWORDS[text.replace(" ", "")])
    if not text:
        raise CodomainSyntaxError(spec, 0, "empty codomain")
    opener, closer = text[0], text[-1]
    if opener == "{":
        if closer != "}":
            raise CodomainSyntaxError(spec, offset + len(text) - 1, "expected '}'")
        inner = text[1:-1]
        if not inner.strip():
            raise ValidationError("EMPTY_SET", "finite codomain must be nonempty")
        values = _parse_numbers(spec, offset + 1, offset + len(text) - 1)
        return Codomain.finite(values)
    if opener == "[":
        if closer != "]":
            where = offset + len(text) - 1
            raise CodomainSyntaxError(spec, where, "expected ']' (open intervals are not supported)")
        values = _parse_numbers(spec, offset + 1, offset + len(text) - 1)
        if len(values) != 2:
            raise CodomainSyntaxError(spec, offset + 1, "interval needs exactly two endpoints")
        if not values[0] < values[1]:
            raise ValidationError("BAD_CODOMAIN", f"interval needs lo < hi, got {values}")
        return Codomain.interval(*values)
    if opener in "(]" or closer in ")[":
        raise CodomainSyntaxError(spec, offset, "open intervals are not supported")
    raise CodomainSyntaxError(spec, offset, "unrecognised codomain")


def render_codomain(E: Codomain) -> str:
    return E.render()


# ---------------------------------------------------------------------------
# Symmetric matrices
# ---------------------------------------------------------------------------


class MatrixKind(enum.Enum):
    COVARIANCE = "COVARIANCE"
    VARIOGRAM = "VARIOGRAM"
    TEST = "TEST"
    GENERIC = "GENERIC"


@dataclass(frozen=True, eq=False)
class SymmetricMatrix:
    entries: np.ndarray
    kind: MatrixKind = MatrixKind.GENERIC
    point_labels: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def order(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return self.entries if dtype is None else self.entries.astype(dtype)

    def with_kind(self, kind: MatrixKind) -> SymmetricMatrix:
        return validate_symmetric(self.entries, kind, labels=self.point_labels)

    def to_dict(self) -> dict:
        out = {"entries": self.entries.tolist(), "kind": self.kind.value}
        if self.point_labels is not None:
            out["labels"] = list(self.point_labels)
        return out


def validate_symmetric(raw, kind: MatrixKind | str = MatrixKind.GENERIC, tol: Tolerances = DEFAULT_TOL,
                       labels: Sequence[str] | None = None) -> SymmetricMatrix:
    """Check and symmetrize a square array.

    Asymmetry up to ``sym_tol * max|a|`` is averaged away; anything larger is
    an ``ASYMMETRIC`` error.  Variograms must also have a zero diagonal.
    """
    if isinstance(raw, SymmetricMatrix):
        raw = raw.entries
    kind = MatrixKind(kind) if not isinstance(kind, MatrixKind) else kind
    a = np.array(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValidationError("NOT_SQUARE", f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("NON_FINITE", "matrix entries must be finite")
    scale = float(np.max(np.abs(a)))
    asym = float(np.max(np.abs(a - a.T)))
    if asym > tol.sym_tol * scale:
        raise ValidationError("ASYMMETRIC", f"max |a_kl - a_lk| = {asym:.3g}")
    a = (a + a.T) / 2
    if kind is MatrixKind.VARIOGRAM:
        d = float(np.max(np.abs(np.diag(a))))
        if d > 1e-12:
            raise ValidationError("NONZERO_DIAGONAL", f"variogram diagonal must be zero (max |g_kk| = {d:.3g})")
        np.fill_diagonal(a, 0.0)
    if labels is not None:
        labels = tuple(str(x) for x in labels)
        if len(labels) != a.shape[0]:
            raise ValidationError("BAD_LABELS", f"{len(labels)} labels for order {a.shape[0]}")
    a.setflags(write=False)
    return SymmetricMatrix(a, kind, labels)


def as_array(M) -> np.ndarray:
    if isinstance(M, SymmetricMatrix):
        return M.entries
    return np.asarray(M, dtype=float)


def eigen_spectrum(S: SymmetricMatrix | np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return np.linalg.eigvalsh(as_array(S))


def inner(A, B) -> float:
    """Trace inner product sum_kl a_kl b_kl."""
    return float(np.sum(as_array(A) * as_array(B)))


# ---------------------------------------------------------------------------
# Gap results and extended reals
# ---------------------------------------------------------------------------


class Unbounded(enum.Enum):
    """Infinite gap values.  Deliberately not a float: arithmetic on them fails."""

    NEG_INF = "-inf"
    POS_INF = "+inf"

    def __neg__(self) -> Unbounded:
        return Unbounded.POS_INF if self is Unbounded.NEG_INF else Unbounded.NEG_INF

    def __str__(self) -> str:
        return self.value


ExtendedReal = "float | Unbounded"


class GapMethod(enum.Enum):
    ENUMERATION = "ENUMERATION"
    VERTEX_SEARCH = "VERTEX_SEARCH"
    LATTICE_ENUM = "LATTICE_ENUM"
    ANALYTIC = "ANALYTIC"
    HEURISTIC_BOUND = "HEURISTIC_BOUND"


@dataclass(frozen=True, eq=False)
class GapResult:
    value: float | Unbounded
    minimizer: np.ndarray | None = None
    method: GapMethod = GapMethod.ANALYTIC
    exact: bool = True
    note: str = ""

    @property
    def is_finite(self) -> bool:
        return not isinstance(self.value, Unbounded)

    def as_float(self) -> float:
        """Float view for reporting; infinities become ``math.inf``."""
        if self.value is Unbounded.NEG_INF:
            return -math.inf
        if self.value is Unbounded.POS_INF:
            return math.inf
        return float(self.value)

    def negated(self) -> GapResult:
        v = -self.value if isinstance(self.value, Unbounded) else -float(self.value)
        return GapResult(v, self.minimizer, self.method, self.exact, self.note)

    def to_dict(self) -> dict:
        return {
            "value": str(self.value) if isinstance(self.value, Unbounded) else float(self.value),
            "minimizer": None if self.minimizer is None else np.asarray(self.minimizer).tolist(),
            "method": self.method.value,
            "exact": self.exact,
            **({"note": self.note} if self.note else {}),
        }


# ---------------------------------------------------------------------------
# Matrix files
# ---------------------------------------------------------------------------


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def dumps_matrix_csv(M) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for row in as_array(M):
        w.writerow([_format_float(x) for x in row])
    return buf.getvalue()


def loads_matrix_csv(text: str) -> np.ndarray:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    try:
        return np.array([[float(c) for c in r] for r in rows], dtype=float)
    except ValueError as exc:
        raise ValidationError("MALFORMED_MATRIX", str(exc)) from None


def load_array(path: str | Path) -> tuple[np.ndarray, list[str] | None, str | None]:
    """Read a CSV grid or a JSON ``{"labels", "entries"}`` document.

    Returns ``(array, labels, kind)``.  JSON entries may be nested to any depth
    (tensors use the same container).
    """
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".csv":
        return loads_matrix_csv(text), None, None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("MALFORMED_MATRIX", f"{path}: {exc}") from None
    if isinstance(doc, list):
        doc = {"entries": doc}
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ValidationError("MALFORMED_MATRIX", f"{path}: expected an object with 'entries'")
    try:
        arr = np.array(doc["entries"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError("MALFORMED_MATRIX", f"{path}: {exc}") from None
    return arr, doc.get("labels"), doc.get("kind")


def load_matrix(path: str | Path, kind: MatrixKind | str = MatrixKind.GENERIC,
                tol: Tolerances = DEFAULT_TOL) -> SymmetricMatrix:
    arr, labels, _ = load_array(path)
    return validate_symmetric(arr, kind, tol, labels=labels)


def save_matrix(path: str | Path, M, labels: Sequence[str] | None = None) -> None:
    path = Path(path)
    if labels is None and isinstance(M, SymmetricMatrix):
        labels = M.point_labels
    if path.suffix.lower() == ".csv":
        path.write_text(dumps_matrix_csv(M))
        return
    doc: dict = {}
    if labels is not None:
        doc["labels"] = list(labels)
    doc["entries"] = as_array(M).tolist()
    path.write_text(json.dumps(doc, indent=1) + "\n")
