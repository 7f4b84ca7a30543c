"""
Capacity, recovery sets and converse bounds for two-server PIR, plus the
comparison of caching tradeoff curves.
"""
import logging
import math
from collections import Counter
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from .algebra import envelope_value, lower_convex_envelope, spanned_rows
from .exceptions import RecoverySetError, ValidationError

logger = logging.getLogger(__name__)

QueryPair = Tuple[object, object]


def pir_capacity(N: int, S: int) -> Fraction:
    """Optimal total download cost 1 + 1/S + ... + 1/S^(N−1)."""
    if N < 1 or S < 1:
        raise ValidationError(f"pir_capacity needs N, S >= 1, got N={N}, S={S}")
    return sum((Fraction(1, S ** i) for i in range(N)), Fraction(0))


@dataclass
class RecoverySets:
    """Designed recovery sets U_τ of a PIR scheme and their conditional slices."""

    pairs: Dict[int, FrozenSet[QueryPair]]
    N1: int
    N2: int
    n1: int
    n2: int
    closure_counts: Dict[int, int] = dataclass_field(default_factory=dict)

    def slice_q1(self, tau: int, q1) -> FrozenSet:
        """U_{τ|Q1=q1}: server-2 queries completing q1 for message τ."""
        return frozenset(b for a, b in self.pairs[tau] if a == q1)

    def slice_q2(self, tau: int, q2) -> FrozenSet:
        return frozenset(a for a, b in self.pairs[tau] if b == q2)

    def as_dict(self) -> Dict:
        return {
            'N1': self.N1,
            'N2': self.N2,
            'n1': self.n1,
            'n2': self.n2,
            'designed_pairs': {str(tau): len(pairs) for tau, pairs in self.pairs.items()},
            'closure_pairs': {str(tau): count for tau, count in self.closure_counts.items()},
        }


def _check_uniform_queries(pir):
    for server in (1, 2):
        law = Counter(row.query(server) for row in pir.transcripts)
        if len(set(law.values())) != 1:
            raise RecoverySetError(
                f"{pir.name}: server-{server} queries are not uniformly distributed",
                details={'server': server, 'law': {repr(k): v for k, v in law.items()}}
            )


def _slice_size(sizes: Dict, label: str, pir) -> int:
    values = set(sizes.values())
    if len(values) != 1:
        worst = min(sizes, key=sizes.get)
        raise RecoverySetError(
            f"{pir.name}: |U_(τ|{label})| is not uniform",
            details={'sizes': sorted(values), 'at': repr(worst)}
        )
    return values.pop()


def recovery_sets(pir, closure: bool = True) -> RecoverySets:
    """
    Build U_τ from the pairs the scheme emits for demand τ, each certified
    by the span oracle, then check slice uniformity and N_s/n_s ≤ N.

    With ``closure`` the number of pairs of Q1×Q2 from which the span oracle
    recovers each message is reported too.
    """
    _check_uniform_queries(pir)
    space1 = pir.query_space(1)
    space2 = pir.query_space(2)
    F = pir.subpacketization

    def recovered(q1, q2) -> np.ndarray:
        known = np.concatenate((pir.answer_matrix(1, q1), pir.answer_matrix(2, q2)))
        mask = spanned_rows(known, pir.GF.Identity(pir.width))
        return mask.reshape(pir.N, F).all(axis=1)

    pairs: Dict[int, set] = {tau: set() for tau in range(1, pir.N + 1)}
    for row in pir.transcripts:
        pairs[row.d].add((row.Q1, row.Q2))

    for tau, members in pairs.items():
        for q1, q2 in members:
            if not recovered(q1, q2)[tau - 1]:
                raise RecoverySetError(
                    f"{pir.name}: emitted pair ({q1!r}, {q2!r}) does not recover message {tau}",
                    details={'tau': tau}
                )

    sizes2 = {(tau, q1): sum(1 for a, _ in pairs[tau] if a == q1) for tau in pairs for q1 in space1}
    sizes1 = {(tau, q2): sum(1 for _, b in pairs[tau] if b == q2) for tau in pairs for q2 in space2}
    n2 = _slice_size(sizes2, 'Q1', pir)
    n1 = _slice_size(sizes1, 'Q2', pir)

    N1, N2 = len(space1), len(space2)
    if N1 > pir.N * n1 or N2 > pir.N * n2:
        raise RecoverySetError(
            f"{pir.name}: N1/n1 or N2/n2 exceeds N",
            details={'N1': N1, 'n1': n1, 'N2': N2, 'n2': n2, 'N': pir.N}
        )

    closure_counts = {}
    if closure:
        totals = np.zeros(pir.N, dtype=np.int64)
        for q1 in space1:
            for q2 in space2:
                totals += recovered(q1, q2)
        closure_counts = {tau: int(totals[tau - 1]) for tau in range(1, pir.N + 1)}

    logger.debug(f"Recovery sets for {pir.name}: N1={N1} N2={N2} n1={n1} n2={n2}")
    return RecoverySets(
        pairs={tau: frozenset(members) for tau, members in pairs.items()},
        N1=N1, N2=N2, n1=n1, n2=n2,
        closure_counts=closure_counts,
    )


@dataclass(frozen=True)
class LowerBoundResult:
    lhs_min: Fraction
    passes: bool
    tight: bool
    alpha: Tuple[int, int]
    target: int

    def __iter__(self):
        return iter((self.lhs_min, self.passes))


def lower_bound(rs: RecoverySets, R_D1, R_D2, N: Optional[int] = None) -> LowerBoundResult:
    """
    Minimize α1·R_D1 + α2·R_D2 over integer pairs with α1·α2 = ⌈N1/n1⌉,
    α1 ≤ N1, α2 ≤ N2, and compare with N.
    """
    R_D1, R_D2 = Fraction(R_D1), Fraction(R_D2)
    N = N if N is not None else len(rs.pairs)
    product = -(-rs.N1 // rs.n1)

    candidates = [
        (alpha1 * R_D1 + (product // alpha1) * R_D2, (alpha1, product // alpha1))
        for alpha1 in range(1, min(product, rs.N1) + 1)
        if product % alpha1 == 0 and product // alpha1 <= rs.N2
    ]
    if not candidates:
        raise RecoverySetError(
            f"No factorization of {product} within [{rs.N1}]x[{rs.N2}]",
            details={'product': product, 'N1': rs.N1, 'N2': rs.N2}
        )

    lhs_min, alpha = min(candidates)
    return LowerBoundResult(lhs_min, lhs_min >= N, lhs_min == N, alpha, N)


def total_cost_bound(N: int, alpha: Optional[int] = None) -> float:
    """N/(√α + 1); α defaults to N."""
    alpha = N if alpha is None else alpha
    return N / (math.sqrt(alpha) + 1)


def meets_total_cost_bound(N: int, R_total) -> bool:
    """Exact test of R_total ≥ N/(√N + 1), i.e. N − R ≤ R·√N."""
    R = Fraction(R_total)
    gap = N - R
    if gap <= 0:
        return True
    return gap * gap <= R * R * N


def sqrt_ceiling(N: int) -> int:
    return math.isqrt(N - 1) + 1 if N > 0 else 0


@dataclass(frozen=True)
class CurveRow:
    M: Fraction
    R_virtual_users: Optional[Fraction]
    R_cor1: Optional[Fraction]


def compare_curves(N: int, K: int) -> List[CurveRow]:
    """
    Virtual-users and PIR-composed envelopes evaluated on a common grid: every
    envelope vertex plus the integer memories 0..N.
    """
    from .caching import tradeoff_points

    if N < 1 or K < 1:
        raise ValidationError(f"compare_curves needs N, K >= 1, got N={N}, K={K}")

    virtual = lower_convex_envelope(tradeoff_points('thm2', N, K))
    composed = lower_convex_envelope(tradeoff_points('cor1', N, K))

    grid = sorted({p.M for p in virtual} | {p.M for p in composed} | {Fraction(m) for m in range(N + 1)})
    return [CurveRow(M, envelope_value(virtual, M), envelope_value(composed, M)) for M in grid]
