"""
Coded caching: MAN placement with MAN or YMA delivery, the virtual-users
scheme, and private schemes composed from a two-server PIR scheme.

Files are cut into one subfile per t-subset of users (lexicographic
order); every subfile holds F′ segments. All functions are linear in the
library, so calling them on ``Library.symbolic`` yields coefficient rows
and calling them on ``Library.exhaustive`` yields every realization at once.
"""
import itertools
import logging
import string
from abc import ABC, abstractmethod
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import cached_property
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from .algebra import Library, SymbolVec, TradeoffPoint, binom, field, subsets
from .bounds import pir_capacity
from .exceptions import SchemeConfigError
from .pir import PirScheme, time_share, tsc2

logger = logging.getLogger(__name__)

Subset = Tuple[int, ...]
DemandVector = Tuple[int, ...]


@dataclass
class CacheState:
    user: int
    man_part: Dict[Tuple[int, Subset], SymbolVec] = dataclass_field(default_factory=dict)
    key_part: Dict[Subset, SymbolVec] = dataclass_field(default_factory=dict)
    metadata: Hashable = 0

    def content(self) -> SymbolVec:
        """Stored symbols stacked in canonical order (MAN part, then keys)."""
        blocks = list(self.man_part.values()) + list(self.key_part.values())
        return np.concatenate(blocks) if blocks else None

    def stored_symbols(self) -> int:
        return sum(block.shape[0] for block in self.man_part.values()) + \
            sum(block.shape[0] for block in self.key_part.values())


@dataclass
class Broadcast:
    payloads: Dict[Subset, SymbolVec]
    metadata: Tuple = ()

    def content(self) -> Optional[SymbolVec]:
        blocks = list(self.payloads.values())
        return np.concatenate(blocks) if blocks else None

    def symbols(self) -> int:
        return sum(block.shape[0] for block in self.payloads.values())


def _check_demands(d: Sequence[int], N: int, K: int) -> DemandVector:
    d = tuple(int(x) for x in d)
    if len(d) != K or any(not 1 <= x <= N for x in d):
        raise SchemeConfigError(f"Demand vector {d} invalid for N={N}, K={K}", details={'d': list(d)})
    return d


class SubfileLayout:
    """Maps (t-subset) subfile indices to segment ranges of each file."""

    def __init__(self, K: int, t: int, segment_len: int = 1):
        if not 0 <= t <= K:
            raise SchemeConfigError(f"t={t} outside [0, {K}]", details={'K': K, 't': t})
        self.K = K
        self.t = t
        self.segment_len = segment_len
        self.subfiles = subsets(K, t)
        self._position = {tau: i for i, tau in enumerate(self.subfiles)}

    @property
    def F(self) -> int:
        return len(self.subfiles) * self.segment_len

    def segments(self, tau: Subset) -> List[int]:
        start = self._position[tau] * self.segment_len
        return list(range(start, start + self.segment_len))

    def subfile(self, library: Library, n: int, tau: Subset) -> SymbolVec:
        return library.data[n - 1, self.segments(tau), :]

    def check(self, library: Library):
        if library.F != self.F:
            raise SchemeConfigError(
                f"Library has {library.F} segments per file, layout needs {self.F}",
                details={'library_F': library.F, 'layout_F': self.F}
            )

    def multicast_groups(self) -> Tuple[Subset, ...]:
        return subsets(self.K, self.t + 1) if self.t < self.K else ()


def man_place(N: int, K: int, t: int, library: Library, segment_len: int = 1) -> List[CacheState]:
    """User k caches W_{n,τ} for every file n and every τ containing k."""
    layout = SubfileLayout(K, t, segment_len)
    layout.check(library)
    if library.N != N:
        raise SchemeConfigError(f"Library has {library.N} files, expected {N}")

    caches = []
    for k in range(1, K + 1):
        state = CacheState(user=k)
        for n in range(1, N + 1):
            for tau in layout.subfiles:
                if k in tau:
                    state.man_part[(n, tau)] = layout.subfile(library, n, tau)
        caches.append(state)
    return caches


def _coded_multicast(d: DemandVector, library: Library, layout: SubfileLayout,
                     groups: Sequence[Subset]) -> Dict[Subset, SymbolVec]:
    payloads = {}
    for S in groups:
        total = None
        for s in S:
            rest = tuple(x for x in S if x != s)
            block = layout.subfile(library, d[s - 1], rest)
            total = block if total is None else total + block
        payloads[S] = total
    return payloads


def man_deliver(d: Sequence[int], library: Library, t: int, segment_len: int = 1) -> Broadcast:
    """One payload per (t+1)-subset S: the sum of W_{d_s, S∖{s}} over s in S."""
    d = _check_demands(d, library.N, len(d))
    layout = SubfileLayout(len(d), t, segment_len)
    layout.check(library)
    return Broadcast(_coded_multicast(d, library, layout, layout.multicast_groups()), metadata=d)


def yma_leaders(d: Sequence[int]) -> Tuple[int, ...]:
    """Lowest-indexed user for every distinct demanded file."""
    first = {}
    for k, n in enumerate(d, start=1):
        first.setdefault(n, k)
    return tuple(sorted(first.values()))


def yma_deliver(d: Sequence[int], library: Library, t: int, segment_len: int = 1) -> Broadcast:
    """MAN delivery restricted to the groups that contain a leader."""
    d = _check_demands(d, library.N, len(d))
    layout = SubfileLayout(len(d), t, segment_len)
    layout.check(library)
    leaders = set(yma_leaders(d))
    groups = [S for S in layout.multicast_groups() if leaders.intersection(S)]
    return Broadcast(_coded_multicast(d, library, layout, groups), metadata=d)


def cyclic_shift(N: int, C: int) -> Tuple[int, ...]:
    """(1, ..., N) shifted right by C positions."""
    return tuple((i - 1 - C) % N + 1 for i in range(1, N + 1))


def virtual_demands(N: int, S_vec: Sequence[int], d: Sequence[int]) -> Tuple[Tuple[int, ...], DemandVector]:
    """The C vector and the demands of the NK virtual users."""
    C = tuple((s - x) % N for s, x in zip(S_vec, d))
    demands = tuple(itertools.chain.from_iterable(cyclic_shift(N, c) for c in C))
    return C, demands


def vu_place(N: int, K: int, t: int, library: Library, S_vec: Sequence[int]) -> List[CacheState]:
    """Real user k takes the cache of virtual user (k−1)N + S_k."""
    if len(S_vec) != K or any(not 1 <= s <= N for s in S_vec):
        raise SchemeConfigError(f"Secrets {tuple(S_vec)} invalid for N={N}", details={'S': list(S_vec)})

    virtual_caches = man_place(N, N * K, t, library)
    caches = []
    for k, secret in enumerate(S_vec, start=1):
        slot = virtual_caches[(k - 1) * N + secret - 1]
        caches.append(CacheState(user=k, man_part=slot.man_part, metadata=secret))
    return caches


def vu_scheme(N: int, K: int, t: int, library: Library, S_vec: Sequence[int],
              d: Sequence[int]) -> Tuple[List[CacheState], Broadcast]:
    """
    Virtual-users scheme: real user k plays virtual user (k−1)N + S_k of an
    (N, NK) MAN system; the broadcast is the C vector plus YMA delivery.
    """
    d = _check_demands(d, N, K)
    caches = vu_place(N, K, t, library, S_vec)
    C, demands = virtual_demands(N, S_vec, d)
    delivery = yma_deliver(demands, library, t)
    return caches, Broadcast(delivery.payloads, metadata=C)


def _pad(block: SymbolVec, rows: int) -> SymbolVec:
    if block.shape[0] == rows:
        return block
    GF = type(block)
    return np.concatenate((block, GF.Zeros((rows - block.shape[0], block.shape[1]))))


def compose_place(N: int, K: int, t: int, pir: PirScheme, library: Library,
                  rand_vec: Sequence[Hashable]) -> List[CacheState]:
    """MAN placement plus, for every τ ∌ k, the server-1 answer on W_{[N],τ} as a key."""
    if pir.N != N:
        raise SchemeConfigError(f"PIR scheme has N={pir.N}, caching system N={N}")
    layout = SubfileLayout(K, t, pir.subpacketization)
    caches = man_place(N, K, t, library, pir.subpacketization)

    for state, r in zip(caches, rand_vec):
        Q1 = pir.placement_query(r)
        state.metadata = Q1
        for tau in layout.subfiles:
            if state.user not in tau:
                state.key_part[tau] = pir.answer(1, Q1, library.segments(layout.segments(tau)))
    return caches


def compose_deliver(d: Sequence[int], pir: PirScheme, library: Library,
                    rand_vec: Sequence[Hashable], t: int) -> Broadcast:
    """
    Y_S = Σ_{s∈S} γ₂(Q₂ₛ, W_{[N],S∖{s}}), padded to the largest server-2
    answer; the Q₂ₛ travel as metadata.
    """
    K = len(d)
    d = _check_demands(d, pir.N, K)
    layout = SubfileLayout(K, t, pir.subpacketization)
    layout.check(library)

    queries = tuple(pir.query_pair(dk, rk)[1] for dk, rk in zip(d, rand_vec))
    width = pir.max_answer_rows(2)

    payloads = {}
    for S in layout.multicast_groups():
        total = None
        for s in S:
            rest = tuple(x for x in S if x != s)
            part = pir.answer(2, queries[s - 1], library.segments(layout.segments(rest)))
            part = _pad(part, width)
            total = part if total is None else total + part
        payloads[S] = total
    return Broadcast(payloads, metadata=queries)


# ---------------------------------------------------------------------------
# Caching systems driven by the auditor
# ---------------------------------------------------------------------------

class CachingSystem(ABC):
    """A caching scheme with per-user randomness, as enumerated by the auditor."""

    name = 'caching'

    def __init__(self, N: int, K: int, t: int, q: int):
        field(q)
        self.N = N
        self.K = K
        self.t = t
        self.q = q

    @property
    @abstractmethod
    def subpacketization(self) -> int:
        """Segments per file."""

    @property
    def user_randomness(self) -> Tuple[Hashable, ...]:
        return (0,)

    @cached_property
    def randomness_vectors(self) -> Tuple[Tuple[Hashable, ...], ...]:
        return tuple(itertools.product(self.user_randomness, repeat=self.K))

    @cached_property
    def demand_vectors(self) -> Tuple[DemandVector, ...]:
        return tuple(itertools.product(range(1, self.N + 1), repeat=self.K))

    @abstractmethod
    def place(self, library: Library, rand_vec) -> List[CacheState]:
        pass

    @abstractmethod
    def deliver(self, library: Library, rand_vec, d: DemandVector) -> Broadcast:
        pass

    @abstractmethod
    def formula_point(self) -> Tuple[Fraction, Fraction]:
        """(M, R) predicted by the scheme's closed form."""

    @cached_property
    def _symbolic(self) -> Library:
        return Library.symbolic(self.N, self.subpacketization, self.q)

    def symbolic_library(self) -> Library:
        return self._symbolic

    @property
    def metadata_space(self) -> Tuple[Hashable, ...]:
        """Values a user's cache metadata can take."""
        return (0,)

    @property
    def broadcast_metadata_space(self) -> Tuple[Hashable, ...]:
        """Values of each per-user entry of the broadcast metadata."""
        return tuple(range(1, self.N + 1))

    def empty_rows(self) -> SymbolVec:
        return field(self.q).Zeros((0, self.N * self.subpacketization))

    def cache_matrix(self, user: int, rand_vec=None) -> SymbolVec:
        """Coefficient rows of what ``user`` stores."""
        rand_vec = rand_vec if rand_vec is not None else self.randomness_vectors[0]
        content = self.place(self.symbolic_library(), rand_vec)[user - 1].content()
        return self.empty_rows() if content is None else content

    def delivery_matrix(self, d: DemandVector, rand_vec=None) -> SymbolVec:
        rand_vec = rand_vec if rand_vec is not None else self.randomness_vectors[0]
        content = self.deliver(self.symbolic_library(), rand_vec, d).content()
        return self.empty_rows() if content is None else content

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.name} N={self.N} K={self.K} t={self.t} q={self.q}>"


class ManScheme(CachingSystem):
    """Non-private MAN placement; delivery is plain MAN or YMA."""

    def __init__(self, N: int, K: int, t: int, q: int = 2, delivery: str = 'man'):
        super().__init__(N, K, t, q)
        if delivery not in ('man', 'yma'):
            raise SchemeConfigError(f"Unknown delivery '{delivery}'")
        self.delivery = delivery
        self.name = delivery
        self.layout = SubfileLayout(K, t)

    @property
    def subpacketization(self):
        return self.layout.F

    def place(self, library, rand_vec=None):
        return man_place(self.N, self.K, self.t, library)

    def deliver(self, library, rand_vec, d):
        deliver = man_deliver if self.delivery == 'man' else yma_deliver
        return deliver(d, library, self.t)

    def formula_point(self):
        M = Fraction(self.N * self.t, self.K)
        lost = min(self.N, self.K) if self.delivery == 'yma' else self.K
        R = Fraction(binom(self.K, self.t + 1) - binom(self.K - lost, self.t + 1), binom(self.K, self.t))
        return M, R


class VirtualUsersScheme(CachingSystem):
    """Demand- and cache-private scheme over NK virtual users."""

    name = 'vu'

    def __init__(self, N: int, K: int, t: int, q: int = 2):
        if not 0 <= t <= N * K:
            raise SchemeConfigError(f"t={t} outside [0, {N * K}]", details={'t': t})
        super().__init__(N, K, t, q)
        self.layout = SubfileLayout(N * K, t)

    @property
    def subpacketization(self):
        return self.layout.F

    @property
    def user_randomness(self):
        return tuple(range(1, self.N + 1))

    @property
    def metadata_space(self):
        return tuple(range(1, self.N + 1))

    @property
    def broadcast_metadata_space(self):
        return tuple(range(self.N))

    def place(self, library, rand_vec):
        return vu_place(self.N, self.K, self.t, library, rand_vec)

    def deliver(self, library, rand_vec, d):
        _, broadcast = vu_scheme(self.N, self.K, self.t, library, rand_vec, d)
        return broadcast

    def formula_point(self):
        NK = self.N * self.K
        R = Fraction(binom(NK, self.t + 1) - binom(NK - self.N, self.t + 1), binom(NK, self.t))
        return Fraction(self.t, self.K), R


class ComposedScheme(CachingSystem):
    """Private caching from a two-server PIR scheme: keys from server 1, payloads from server 2."""

    def __init__(self, pir: PirScheme, K: int, t: int):
        super().__init__(pir.N, K, t, pir.q)
        self.pir = pir
        self.name = f"compose:{pir.name}"
        self.layout = SubfileLayout(K, t, pir.subpacketization)

    @property
    def subpacketization(self):
        return self.layout.F

    @property
    def user_randomness(self):
        return self.pir.randomness_space

    @property
    def metadata_space(self):
        return self.pir.query_space(1)

    @property
    def broadcast_metadata_space(self):
        return self.pir.query_space(2)

    def place(self, library, rand_vec):
        return compose_place(self.N, self.K, self.t, self.pir, library, rand_vec)

    def deliver(self, library, rand_vec, d):
        return compose_deliver(d, self.pir, library, rand_vec, self.t)

    def formula_point(self):
        R1, R2 = self.pir.download_costs()
        share = Fraction(self.t, self.K)
        M = self.N * share + (1 - share) * R1
        R = R2 * Fraction(self.K - self.t, self.t + 1)
        return M, R


# ---------------------------------------------------------------------------
# Worked example with two files and two users
# ---------------------------------------------------------------------------

def render_symbols(row, q: int, layout: SubfileLayout) -> str:
    """Linear combination with files named A, B, ... and subfiles by user set."""
    terms = []
    for index, coefficient in enumerate(int(c) for c in row):
        if coefficient == 0:
            continue
        n, f = divmod(index, layout.F)
        tau = layout.subfiles[f // layout.segment_len]
        name = string.ascii_uppercase[n] + ''.join(str(x) for x in tau)
        if layout.segment_len > 1:
            name += f".{f % layout.segment_len + 1}"
        prefix = '+' if coefficient == 1 else '-' if coefficient == q - 1 else f"+{coefficient}"
        terms.append(f"{prefix}{name}")
    text = ''.join(terms)
    return text[1:] if text.startswith('+') else (text or '0')


def example1_table() -> Dict[Tuple[Tuple[int, int], Tuple[str, str]], str]:
    """
    Transmissions of the N = K = 2, t = 1 scheme built on tsc2.

    Keys are ((T1, T2), (d1, d2)) with demands as letters; values list the
    per-user terms in user order, e.g. 'A2+B1'.
    """
    pir = tsc2()
    scheme = ComposedScheme(pir, 2, 1)
    layout = scheme.layout
    library = scheme.symbolic_library()
    table = {}

    for rand_vec in scheme.randomness_vectors:
        for d in scheme.demand_vectors:
            queries = [pir.query_pair(dk, rk)[1] for dk, rk in zip(d, rand_vec)]
            terms = []
            for s, query in zip((1, 2), queries):
                rest = (3 - s,)
                answer = pir.answer(2, query, library.segments(layout.segments(rest)))
                terms.append(render_symbols(answer[0], pir.q, layout))
            letters = tuple(string.ascii_uppercase[x - 1] for x in d)
            table[(tuple(rand_vec), letters)] = '+'.join(terms)
    return table


# ---------------------------------------------------------------------------
# Memory-load tradeoff generators
# ---------------------------------------------------------------------------

TRADEOFF_GENERATORS = ('thm2', 'cor1', 'cor_smallN', 'privacy_key', 'compose', 'pir_costs')


def _t_values(t: Optional[int], low: int, high: int) -> List[int]:
    if t is None:
        return list(range(low, high + 1))
    if not low <= t <= high:
        raise SchemeConfigError(f"t={t} outside [{low}, {high}]", details={'t': t, 'range': [low, high]})
    return [t]


def _anchors(N: int, scheme: str) -> List[TradeoffPoint]:
    return [TradeoffPoint(Fraction(0), Fraction(N), 1, scheme), TradeoffPoint(Fraction(N), Fraction(0), 1, scheme)]


def _composed_points(N: int, K: int, t: Optional[int], R1: Fraction, R2: Fraction,
                     subpacketization: int, scheme: str) -> List[TradeoffPoint]:
    points = [] if t is not None else _anchors(N, scheme)
    for value in _t_values(t, 0, K - 1):
        share = Fraction(value, K)
        points.append(TradeoffPoint(
            N * share + (1 - share) * R1,
            R2 * Fraction(K - value, value + 1),
            binom(K, value) * subpacketization,
            scheme,
        ))
    return points


def tradeoff_points(generator: str, N: int, K: int, t: Optional[int] = None,
                    mu=Fraction(1), pir: Optional[PirScheme] = None) -> List[TradeoffPoint]:
    """
    Exact (M, R) points with subpacketization for one achievability result.

    ``t`` restricts to a single point; ``mu`` is the server-1 time-sharing
    fraction; ``pir`` is required by the 'compose' generator.
    """
    mu = Fraction(mu)
    if generator == 'thm2':
        NK = N * K
        return [
            TradeoffPoint(
                Fraction(value, K),
                Fraction(binom(NK, value + 1) - binom(NK - N, value + 1), binom(NK, value)),
                binom(NK, value),
                'thm2',
            )
            for value in _t_values(t, 0, NK)
        ]

    if generator == 'cor1':
        half = pir_capacity(N, 2) / 2
        return _composed_points(N, K, t, half, half, 1, 'cor1')

    if generator == 'cor_smallN':
        if N == 2:
            R1 = mu / 2 + (1 - mu)
            R2 = mu + (1 - mu) / 2
        elif N in (3, 4):
            R1 = R2 = Fraction(1)
        else:
            raise SchemeConfigError(f"cor_smallN covers N in {{2, 3, 4}}, got {N}", details={'N': N})
        return _composed_points(N, K, t, R1, R2, 1, 'cor_smallN')

    if generator == 'privacy_key':
        points = []
        for value in _t_values(t, 0, K):
            points.append(TradeoffPoint(
                1 + Fraction(value * (N - 1), K),
                Fraction(binom(K, value + 1) - binom(K - min(N - 1, K), value + 1), binom(K, value)),
                binom(K, value),
                'privacy_key',
            ))
        return points

    if generator == 'compose':
        if pir is None:
            raise SchemeConfigError("The 'compose' generator needs a PIR scheme")
        shared = time_share(pir, mu)
        R1, R2 = shared.download_costs()
        return _composed_points(N, K, t, R1, R2, shared.subpacketization, f"compose:{pir.name}")

    if generator == 'pir_costs':
        return [
            TradeoffPoint(
                Fraction(value),
                Fraction(binom(N, value + 1), binom(N, value)),
                binom(N, value),
                'pir_costs',
            )
            for value in _t_values(t, 1, N)
        ]

    raise SchemeConfigError(
        f"Unknown tradeoff generator '{generator}'",
        details={'generator': generator, 'choices': list(TRADEOFF_GENERATORS)}
    )
