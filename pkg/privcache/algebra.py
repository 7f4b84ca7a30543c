"""
Arithmétique sur GF(q), combinatoire, oracle de décodage linéaire,
lois discrètes exactes et enveloppes convexes inférieures.

Every scheme in the package is linear over a prime field, so a single
span oracle decides decodability everywhere. Symbols are galois field
arrays: a 1-D array is one symbol vector, a 2-D array stacks one column
per library realization so that whole enumerations run in a single call.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import galois
import numpy as np

from .exceptions import FieldArithmeticError, InconsistentSystemError, ValidationError
from .metrics import time_it

logger = logging.getLogger(__name__)

# A SymbolVec is a galois FieldArray; the alias documents intent in signatures.
SymbolVec = galois.FieldArray

FIELD_OPS = ('add', 'sub', 'mul', 'inv')


@lru_cache(maxsize=None)
def field(q: int):
    """Return the galois class for GF(q), refusing non-prime moduli."""
    if not isinstance(q, int) or q < 2 or not galois.is_prime(q):
        raise FieldArithmeticError(
            f"Field modulus must be a prime >= 2, got {q}",
            details={'q': q}
        )
    return galois.GF(q)


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        field(self.q)
        if not 0 <= self.value < self.q:
            raise FieldArithmeticError(
                f"Value {self.value} outside [0, {self.q - 1}]",
                details={'value': self.value, 'q': self.q}
            )

    def __add__(self, other):
        return gf_ops(self, other, 'add')

    def __sub__(self, other):
        return gf_ops(self, other, 'sub')

    def __mul__(self, other):
        return gf_ops(self, other, 'mul')

    def __neg__(self):
        return gf_ops(FieldElement(0, self.q), self, 'sub')

    def inverse(self):
        return gf_ops(self, None, 'inv')


def gf_ops(a: FieldElement, b: Optional[FieldElement], op: str) -> FieldElement:
    """Mod-q arithmetic on two elements of the same prime field."""
    if op not in FIELD_OPS:
        raise FieldArithmeticError(f"Unknown field operation '{op}'", details={'op': op})

    GF = field(a.q)
    x = GF(a.value)

    if op == 'inv':
        if a.value == 0:
            raise FieldArithmeticError("Inversion of zero", details={'q': a.q})
        return FieldElement(int(np.reciprocal(x)), a.q)

    if b is None or b.q != a.q:
        raise FieldArithmeticError(
            "Modulus mismatch",
            details={'left': a.q, 'right': None if b is None else b.q}
        )

    y = GF(b.value)
    result = {'add': x + y, 'sub': x - y, 'mul': x * y}[op]
    return FieldElement(int(result), a.q)


def binom(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def subsets(K: int, t: int) -> Tuple[Tuple[int, ...], ...]:
    """All t-subsets of {1..K} in lexicographic order."""
    if not 0 <= t <= K:
        raise ValidationError(f"Subset size {t} outside [0, {K}]", details={'K': K, 't': t})
    return tuple(itertools.combinations(range(1, K + 1), t))


def span_coefficients(known: SymbolVec, targets: SymbolVec) -> Optional[SymbolVec]:
    """
    Solve lam @ known == targets.

    Returns the (k, m) coefficient matrix with free variables set to zero,
    or None when any target row lies outside the row span of ``known``.
    """
    GF = type(targets)
    m = known.shape[0]
    k = targets.shape[0]

    if m == 0:
        return GF.Zeros((k, 0)) if not np.any(targets) else None

    augmented = np.concatenate((known.T, targets.T), axis=1)
    reduced = augmented.row_reduce(ncols=m)
    plain = reduced.view(np.ndarray)

    pivot_block = plain[:, :m] != 0
    has_pivot = pivot_block.any(axis=1)

    if np.any(plain[~has_pivot, m:]):
        return None

    coefficients = GF.Zeros((k, m))
    pivot_rows = np.nonzero(has_pivot)[0]
    pivot_cols = np.argmax(pivot_block[pivot_rows], axis=1)
    coefficients[:, pivot_cols] = reduced[pivot_rows, m:].T
    return coefficients


def in_span(known: SymbolVec, targets: SymbolVec) -> bool:
    return span_coefficients(known, targets) is not None


def spanned_rows(known: SymbolVec, targets: SymbolVec) -> np.ndarray:
    """Boolean mask: which rows of ``targets`` lie in the row span of ``known``."""
    m = known.shape[0]
    if m == 0:
        return ~np.any(targets.view(np.ndarray), axis=1)

    augmented = np.concatenate((known.T, targets.T), axis=1)
    plain = augmented.row_reduce(ncols=m).view(np.ndarray)
    free = ~np.any(plain[:, :m] != 0, axis=1)
    return ~np.any(plain[free, m:] != 0, axis=0)


def check_consistency(known: SymbolVec, values: SymbolVec):
    """Raise if the known equations contradict each other for some realization."""
    if known.shape[0] == 0:
        return
    left_null = known.left_null_space()
    if left_null.shape[0] and np.any(left_null @ values):
        raise InconsistentSystemError(
            "Known equations are inconsistent",
            details={'equations': int(known.shape[0]), 'relations': int(left_null.shape[0])}
        )


@time_it('algebra.span_solve')
def span_solve(known: SymbolVec, values: SymbolVec, targets: SymbolVec) -> Optional[SymbolVec]:
    """
    Gaussian-elimination decoder.

    ``known`` holds one coefficient row per known equation, ``values`` the
    matching right-hand sides (one column per realization). Returns the
    values implied for every ``targets`` row, or None if not in span.
    """
    check_consistency(known, values)
    coefficients = span_coefficients(known, targets)
    if coefficients is None:
        return None
    if values.ndim == 1:
        return coefficients @ values.reshape(-1, 1)
    return coefficients @ values


# ---------------------------------------------------------------------------
# Exact discrete distributions
# ---------------------------------------------------------------------------

def _aggregate(codes: np.ndarray, counts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    if codes.shape[1] == 0:
        return np.zeros((1, 0), dtype=np.int64), np.array([counts.sum()], dtype=counts.dtype)
    unique, inverse = np.unique(codes, axis=0, return_inverse=True)
    merged = np.zeros(len(unique), dtype=counts.dtype)
    np.add.at(merged, inverse.reshape(-1), counts)
    return unique, merged


class DistributionTable:
    """
    Joint law of named variables, stored as integer counts over a total.

    Rows are canonical integer codes sorted lexicographically; the
    probability of a row is exactly ``Fraction(count, total)``.
    """

    def __init__(self, variables: Sequence[str], codes, counts):
        self.variables = tuple(variables)
        counts = np.asarray(counts, dtype=np.int64).reshape(-1)
        if self.variables:
            codes = np.asarray(codes, dtype=np.int64).reshape(-1, len(self.variables))
        else:
            codes = np.zeros((len(counts), 0), dtype=np.int64)
        keep = counts > 0
        self.codes, self.counts = _aggregate(codes[keep], counts[keep])
        self.total = int(self.counts.sum())

    @classmethod
    def from_dict(cls, variables: Sequence[str], weights: Dict[Tuple[int, ...], int]):
        items = sorted(weights.items())
        codes = np.array([key for key, _ in items], dtype=np.int64).reshape(-1, len(variables))
        counts = np.array([value for _, value in items], dtype=np.int64)
        return cls(variables, codes, counts)

    def __len__(self):
        return int(self.counts.shape[0])

    def __eq__(self, other):
        if not isinstance(other, DistributionTable):
            return NotImplemented
        return (
            self.variables == other.variables
            and self.codes.shape == other.codes.shape
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.counts * other.total, other.counts * self.total)
        )

    def _columns(self, names: Sequence[str]) -> List[int]:
        missing = [name for name in names if name not in self.variables]
        if missing:
            raise ValidationError(f"Unknown variables {missing}", details={'schema': self.variables})
        return [self.variables.index(name) for name in names]

    def rows(self) -> Iterator[Tuple[Tuple[int, ...], Fraction]]:
        for code, count in zip(self.codes.tolist(), self.counts.tolist()):
            yield tuple(code), Fraction(count, self.total)

    def as_dict(self) -> Dict[Tuple[int, ...], Fraction]:
        return dict(self.rows())

    def probability(self, row: Sequence[int]) -> Fraction:
        match = np.all(self.codes == np.asarray(row, dtype=np.int64), axis=1)
        return Fraction(int(self.counts[match].sum()), self.total)

    def total_probability(self) -> Fraction:
        return Fraction(int(self.counts.sum()), self.total)

    def marginal(self, names: Sequence[str]) -> 'DistributionTable':
        columns = self._columns(names)
        return DistributionTable(names, self.codes[:, columns], self.counts)

    def restrict(self, name: str, value: int) -> 'DistributionTable':
        """Conditional table given ``name == value`` (the variable is kept)."""
        column = self._columns([name])[0]
        keep = self.codes[:, column] == value
        return DistributionTable(self.variables, self.codes[keep], self.counts[keep])


def entropy(dist: DistributionTable, names: Sequence[str]) -> float:
    """Shannon entropy of the marginal over ``names``, in bits."""
    if not names:
        raise ValidationError("Entropy needs at least one variable")
    counts = dist.marginal(names).counts.astype(np.float64)
    total = float(dist.total)
    return float(math.log2(total) - np.sum(counts * np.log2(counts)) / total)


@dataclass(frozen=True)
class MutualInformation:
    exactly_zero: bool
    bits: float

    @property
    def verdict(self) -> str:
        return 'pass' if self.exactly_zero else 'fail'


def _group_counts(codes: np.ndarray, counts: np.ndarray, columns: List[int]) -> np.ndarray:
    """For every row, the total count of rows sharing its values on ``columns``."""
    if not columns:
        return np.full(len(counts), counts.sum(), dtype=counts.dtype)
    _, inverse = np.unique(codes[:, columns], axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    sums = np.zeros(inverse.max() + 1, dtype=counts.dtype)
    np.add.at(sums, inverse, counts)
    return sums[inverse]


def mutual_information_zero(dist: DistributionTable, X: Sequence[str], Y: Sequence[str],
                            Z: Sequence[str] = ()) -> MutualInformation:
    """
    Exact test of I(X;Y|Z) = 0.

    Checks c(x,y,z)·c(z) == c(x,z)·c(y,z) on every stored row; summing the
    identity over the row set forces the products of absent pairs to vanish,
    so positive rows suffice.
    """
    X, Y, Z = list(X), list(Y), list(Z)
    if set(X) & set(Y) or set(X) & set(Z) or set(Y) & set(Z):
        raise ValidationError("Variable groups must be disjoint", details={'X': X, 'Y': Y, 'Z': Z})

    joint = dist.marginal(X + Y + Z)
    counts = joint.counts if joint.total < 2 ** 31 else joint.counts.astype(object)
    nx, ny = len(X), len(Y)
    x_cols = list(range(nx))
    y_cols = list(range(nx, nx + ny))
    z_cols = list(range(nx + ny, nx + ny + len(Z)))

    c_z = _group_counts(joint.codes, counts, z_cols)
    c_xz = _group_counts(joint.codes, counts, x_cols + z_cols)
    c_yz = _group_counts(joint.codes, counts, y_cols + z_cols)

    if np.array_equal(counts * c_z, c_xz * c_yz):
        return MutualInformation(True, 0.0)

    bits = entropy(joint, X + Z) + entropy(joint, Y + Z) - entropy(joint, X + Y + Z)
    if Z:
        bits -= entropy(joint, Z)
    return MutualInformation(False, max(bits, 0.0))


# ---------------------------------------------------------------------------
# Tradeoff points and envelopes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TradeoffPoint:
    M: Fraction
    R: Fraction
    subpacketization: int = 1
    scheme: str = ''

    def __post_init__(self):
        if self.M < 0 or self.R < 0:
            raise ValidationError(
                f"Tradeoff point ({self.M}, {self.R}) has a negative coordinate"
            )
        if self.subpacketization < 1:
            raise ValidationError("Subpacketization must be positive")


def _cross(o: TradeoffPoint, a: TradeoffPoint, b: TradeoffPoint) -> Fraction:
    return (a.M - o.M) * (b.R - o.R) - (a.R - o.R) * (b.M - o.M)


def lower_convex_envelope(points: Sequence[TradeoffPoint]) -> List[TradeoffPoint]:
    """Vertices of the lower convex hull by increasing M; interior collinear points are dropped."""
    if not points:
        raise ValidationError("Cannot build an envelope from no points")

    best: Dict[Fraction, TradeoffPoint] = {}
    for point in points:
        current = best.get(point.M)
        if current is None or (point.R, point.subpacketization) < (current.R, current.subpacketization):
            best[point.M] = point

    hull: List[TradeoffPoint] = []
    for point in sorted(best.values(), key=lambda p: p.M):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) <= 0:
            hull.pop()
        hull.append(point)
    return hull


def envelope_value(envelope: Sequence[TradeoffPoint], M: Fraction) -> Optional[Fraction]:
    """
    Piecewise-linear value of an envelope at memory ``M``.

    Beyond the last vertex the last load holds; before the first vertex
    the envelope is undefined (None).
    """
    M = Fraction(M)
    if M < envelope[0].M:
        return None
    for left, right in zip(envelope, envelope[1:]):
        if left.M <= M <= right.M:
            return left.R + (right.R - left.R) * (M - left.M) / (right.M - left.M)
    return envelope[-1].R


# ---------------------------------------------------------------------------
# Libraries
# ---------------------------------------------------------------------------

class Library:
    """
    N files of F segments, each segment holding L symbols over GF(q).

    ``data`` has shape (N, F, L). Two special layouts drive the auditor:
    the symbolic library (segment i carries the unit vector e_i, so any
    linear scheme applied to it emits its own coefficient rows) and the
    exhaustive library (one column per realization of GF(q)^{N·F}).
    """

    def __init__(self, data: SymbolVec):
        if data.ndim == 2:
            data = data.reshape(data.shape[0], data.shape[1], 1)
        if data.ndim != 3:
            raise ValidationError(f"Library data must be 3-D, got shape {data.shape}")
        self.data = data

    @property
    def GF(self):
        return type(self.data)

    @property
    def q(self) -> int:
        return int(self.GF.order)

    @property
    def N(self) -> int:
        return int(self.data.shape[0])

    @property
    def F(self) -> int:
        return int(self.data.shape[1])

    @property
    def L(self) -> int:
        return int(self.data.shape[2])

    @classmethod
    def from_values(cls, values, q: int) -> 'Library':
        return cls(field(q)(np.asarray(values, dtype=np.int64) % q))

    @classmethod
    def symbolic(cls, N: int, F: int, q: int) -> 'Library':
        GF = field(q)
        return cls(GF.Identity(N * F).reshape(N, F, N * F))

    @classmethod
    def exhaustive(cls, N: int, F: int, q: int) -> 'Library':
        """Every library realization; column j spells j in base q, symbol 0 first."""
        size = N * F
        columns = np.arange(q ** size, dtype=np.int64)
        digits = (columns[np.newaxis, :] // (q ** np.arange(size, dtype=np.int64))[:, np.newaxis]) % q
        return cls(field(q)(digits).reshape(N, F, q ** size))

    def flat(self) -> SymbolVec:
        return self.data.reshape(self.N * self.F, self.L)

    def message(self, n: int) -> SymbolVec:
        """Segments of file n (1-indexed), shape (F, L)."""
        return self.data[n - 1]

    def segments(self, indices: Sequence[int]) -> 'Library':
        """Sub-library keeping the given segment positions of every file."""
        return Library(self.data[:, list(indices), :])

    def columns(self, start: int, stop: int) -> 'Library':
        return Library(self.data[:, :, start:stop])
