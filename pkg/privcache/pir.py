"""
Two-server PIR schemes.

A scheme is described by its query tables and, for every query, the
coefficient matrix of the answer over the N·F′ message symbols. Answers,
decoding, costs and recovery all derive from those matrices.
"""
import itertools
import logging
from abc import ABC, abstractmethod
from fractions import Fraction
from functools import cached_property
from typing import Dict, Hashable, List, NamedTuple, Sequence, Tuple

import numpy as np

from .algebra import Library, SymbolVec, binom, field, span_solve
from .exceptions import InvariantViolationError, SchemeConfigError

logger = logging.getLogger(__name__)

Query = Hashable
Randomness = Hashable


class PirTranscript(NamedTuple):
    """One run of the protocol: demand, randomness and the two queries it produces."""

    d: int
    r: Randomness
    Q1: Query
    Q2: Query

    def query(self, server: int) -> Query:
        return self.Q1 if server == 1 else self.Q2


def modn(b: int, a: int) -> int:
    """b modulo a, represented in {1, ..., a}."""
    return (b - 1) % a + 1


def render_combination(row, q: int, F: int = 1) -> str:
    """Human-readable linear combination, e.g. '-W1+W2+W3+W4'."""
    terms = []
    for index, coefficient in enumerate(int(c) for c in row):
        if coefficient == 0:
            continue
        n, f = divmod(index, F)
        name = f"W{n + 1}" if F == 1 else f"W{n + 1},{f + 1}"
        if coefficient == 1:
            prefix = '+'
        elif coefficient == q - 1:
            prefix = '-'
        else:
            prefix = f"+{coefficient}"
        terms.append(f"{prefix}{name}")
    text = ''.join(terms)
    return text[1:] if text.startswith('+') else (text or '0')


class PirScheme(ABC):
    """Common behaviour of two-server PIR schemes over GF(q)."""

    name = 'pir'

    def __init__(self, N: int, q: int, subpacketization: int = 1):
        field(q)
        if N < 1 or subpacketization < 1:
            raise SchemeConfigError(
                f"Invalid scheme size N={N}, F'={subpacketization}",
                details={'N': N, 'subpacketization': subpacketization}
            )
        self.N = N
        self.q = q
        self.subpacketization = subpacketization

    @property
    def GF(self):
        return field(self.q)

    @property
    def width(self) -> int:
        """Total message symbols, N·F′."""
        return self.N * self.subpacketization

    @property
    @abstractmethod
    def randomness_space(self) -> Tuple[Randomness, ...]:
        """Enumerable randomness values in canonical order."""

    @abstractmethod
    def _queries(self, d: int, r: Randomness) -> Tuple[Query, Query]:
        pass

    @abstractmethod
    def answer_matrix(self, server: int, query: Query) -> SymbolVec:
        """Coefficient rows of the answer to ``query`` over the N·F′ symbols."""

    @cached_property
    def _randomness_set(self):
        return frozenset(self.randomness_space)

    def query_pair(self, d: int, r: Randomness) -> Tuple[Query, Query]:
        if not 1 <= d <= self.N:
            raise SchemeConfigError(f"Demand {d} outside [1, {self.N}]", details={'d': d, 'N': self.N})
        if r not in self._randomness_set:
            raise SchemeConfigError(f"Randomness {r!r} not in the scheme's space", details={'r': repr(r)})
        return self._queries(d, r)

    def placement_query(self, r: Randomness) -> Query:
        """Server-1 query; for every built-in scheme it depends on r only."""
        queries = {self._queries(d, r)[0] for d in range(1, self.N + 1)}
        if len(queries) != 1:
            raise SchemeConfigError(
                f"{self.name}: server-1 query depends on the demand",
                details={'r': repr(r)}
            )
        return queries.pop()

    @cached_property
    def transcripts(self) -> Tuple[PirTranscript, ...]:
        """One transcript per demand and randomness, demands first."""
        return tuple(
            PirTranscript(d, r, *self._queries(d, r))
            for d in range(1, self.N + 1)
            for r in self.randomness_space
        )

    def query_space(self, server: int) -> Tuple[Query, ...]:
        values = {row.query(server) for row in self.transcripts}
        return tuple(sorted(values))

    def _check_library(self, library: Library):
        if library.N != self.N or library.F != self.subpacketization:
            raise SchemeConfigError(
                f"Library layout {library.N}x{library.F} does not match scheme "
                f"{self.N}x{self.subpacketization}",
                details={'library': [library.N, library.F],
                         'scheme': [self.N, self.subpacketization]}
            )

    def answer(self, server: int, query: Query, library: Library) -> SymbolVec:
        self._check_library(library)
        return self.answer_matrix(server, query) @ library.flat()

    def decode(self, d: int, r: Randomness, A1: SymbolVec, A2: SymbolVec) -> SymbolVec:
        """Recover W_d (shape F′ × L) from both answers."""
        Q1, Q2 = self.query_pair(d, r)
        known = np.concatenate((self.answer_matrix(1, Q1), self.answer_matrix(2, Q2)))
        values = np.concatenate(tuple(A if A.ndim == 2 else A.reshape(-1, 1) for A in (A1, A2)))
        start = (d - 1) * self.subpacketization
        targets = self.GF.Identity(self.width)[start:start + self.subpacketization]
        message = span_solve(known, values, targets)
        if message is None:
            raise InvariantViolationError(
                f"{self.name}: answers do not determine message {d}",
                details={'d': d, 'r': repr(r)}
            )
        return message

    def answer_rows(self, server: int, query: Query) -> int:
        return int(self.answer_matrix(server, query).shape[0])

    def download_costs(self) -> Tuple[Fraction, Fraction]:
        """Expected answer length per message symbol for each server (uniform d and r)."""
        costs = []
        for server in (1, 2):
            rows = sum(self.answer_rows(server, row.query(server)) for row in self.transcripts)
            costs.append(Fraction(rows, len(self.transcripts) * self.subpacketization))
        return costs[0], costs[1]

    def max_answer_rows(self, server: int) -> int:
        return max(self.answer_rows(server, query) for query in self.query_space(server))

    def describe_query(self, server: int, query: Query) -> str:
        matrix = self.answer_matrix(server, query)
        if matrix.shape[0] == 0:
            return '0'
        return '; '.join(render_combination(row, self.q, self.subpacketization) for row in matrix)

    def __repr__(self):
        return f"<{self.__class__.__name__} {self.name} N={self.N} q={self.q} F'={self.subpacketization}>"


class TablePirScheme(PirScheme):
    """
    Scheme given by explicit query tables with one-symbol messages.

    ``server1`` maps the randomness T to a server-1 query id; ``server2``
    maps (T, d) to a server-2 query id; ``combinations`` give the answer
    rows (signed coefficient tuples) of each query id.
    """

    def __init__(self, name: str, N: int, q: int,
                 server1: Dict[int, int],
                 server2: Dict[Tuple[int, int], int],
                 combinations1: Dict[int, Sequence[Sequence[int]]],
                 combinations2: Dict[int, Sequence[Sequence[int]]]):
        super().__init__(N, q)
        self.name = name
        self._server1 = server1
        self._server2 = server2
        self._matrices = {
            1: {qid: self._matrix(rows) for qid, rows in combinations1.items()},
            2: {qid: self._matrix(rows) for qid, rows in combinations2.items()},
        }

    def _matrix(self, rows):
        values = np.asarray(rows, dtype=np.int64).reshape(-1, self.N) % self.q
        return self.GF(values)

    @property
    def randomness_space(self):
        return tuple(sorted(self._server1))

    def _queries(self, d, r):
        return self._server1[r], self._server2[(r, d)]

    def answer_matrix(self, server, query):
        try:
            return self._matrices[server][query]
        except KeyError:
            raise SchemeConfigError(
                f"{self.name}: unknown query {query!r} for server {server}",
                details={'server': server, 'query': repr(query)}
            )


def tsc2(q: int = 2) -> TablePirScheme:
    """N=2: server 1 answers nothing or W1+W2, server 2 a single message."""
    return TablePirScheme(
        'tsc2', 2, q,
        server1={0: 1, 1: 2},
        server2={(0, 1): 1, (0, 2): 2, (1, 1): 2, (1, 2): 1},
        combinations1={1: [], 2: [(1, 1)]},
        combinations2={1: [(1, 0)], 2: [(0, 1)]},
    )


def xor3(q: int = 2) -> TablePirScheme:
    """N=3 scheme with one pairwise sum from server 1 and one message from server 2."""
    rows2 = {  # T -> server-2 query id for d = 1, 2, 3
        0: (2, 1, 3),
        1: (3, 2, 1),
        2: (1, 3, 2),
    }
    return TablePirScheme(
        'xor3', 3, q,
        server1={0: 1, 1: 2, 2: 3},
        server2={(T, d): row[d - 1] for T, row in rows2.items() for d in (1, 2, 3)},
        combinations1={1: [(1, 1, 0)], 2: [(1, 0, 1)], 3: [(0, 1, 1)]},
        combinations2={1: [(1, 0, 0)], 2: [(0, 1, 0)], 3: [(0, 0, 1)]},
    )


def signed4(q: int = 3) -> TablePirScheme:
    """N=4 scheme with signed sums; needs odd characteristic."""
    if q == 2:
        raise SchemeConfigError("signed4 needs -1 != 1; use q >= 3", details={'q': q})
    rows2 = {
        0: (1, 2, 3, 4),
        1: (2, 1, 4, 3),
        2: (3, 4, 1, 2),
        3: (4, 3, 2, 1),
    }
    return TablePirScheme(
        'signed4', 4, q,
        server1={0: 1, 1: 2, 2: 3, 3: 4},
        server2={(T, d): row[d - 1] for T, row in rows2.items() for d in (1, 2, 3, 4)},
        combinations1={
            1: [(1, 1, 1, 1)],
            2: [(-1, -1, 1, 1)],
            3: [(-1, 1, -1, 1)],
            4: [(-1, 1, 1, -1)],
        },
        combinations2={
            1: [(-1, 1, 1, 1)],
            2: [(1, -1, 1, 1)],
            3: [(1, 1, -1, 1)],
            4: [(1, 1, 1, -1)],
        },
    )


class PrivacyKeyPir(PirScheme):
    """
    Key-masked retrieval: server 1 returns p·W, server 2 returns (p + e_d)·W.

    The key p ranges over GF(q)^N with coordinates summing to q−1.
    """

    def __init__(self, N: int, q: int):
        super().__init__(N, q)
        self.name = f"pk:{N}:{q}"

    @cached_property
    def randomness_space(self):
        return tuple(
            p for p in itertools.product(range(self.q), repeat=self.N)
            if sum(p) % self.q == self.q - 1
        )

    def _queries(self, d, r):
        shifted = list(r)
        shifted[d - 1] = (shifted[d - 1] + 1) % self.q
        return tuple(r), tuple(shifted)

    def answer_matrix(self, server, query):
        if len(query) != self.N:
            raise SchemeConfigError(f"{self.name}: malformed query {query!r}")
        return self.GF([list(query)])


def pk_pir(N: int, q: int) -> PrivacyKeyPir:
    return PrivacyKeyPir(N, q)


class CachingToPir(PirScheme):
    """
    PIR from a deterministic coded-caching scheme with K = N users.

    Server 1 returns the cache of user r; server 2 returns the broadcast for
    the demand vector cyclically shifted so that user r asks for θ.
    """

    def __init__(self, cc):
        if cc.K != cc.N:
            raise SchemeConfigError(
                f"Caching scheme needs K = N, got K={cc.K}, N={cc.N}",
                details={'K': cc.K, 'N': cc.N}
            )
        super().__init__(cc.N, cc.q, cc.subpacketization)
        self.cc = cc
        self.name = f"cc2pir:{cc.name}:{cc.N}:{cc.t}"

    @property
    def randomness_space(self):
        return tuple(range(1, self.N + 1))

    def shifted_demands(self, shift: int) -> Tuple[int, ...]:
        return tuple(modn(i - shift, self.N) for i in range(1, self.N + 1))

    def _queries(self, d, r):
        return r, modn(r - d, self.N)

    @cached_property
    def _answers(self):
        return {
            1: {r: self.cc.cache_matrix(r) for r in self.randomness_space},
            2: {s: self.cc.delivery_matrix(self.shifted_demands(s)) for s in self.randomness_space},
        }

    def answer_matrix(self, server, query):
        try:
            return self._answers[server][query]
        except KeyError:
            raise SchemeConfigError(
                f"{self.name}: unknown query {query!r} for server {server}",
                details={'server': server, 'query': repr(query)}
            )


def caching_to_pir(cc) -> CachingToPir:
    return CachingToPir(cc)


class SwappedPirScheme(PirScheme):
    """
    The base scheme with server roles exchanged.

    The randomness is re-parametrized through a per-demand bijection σ_d with
    base.Q2(d, σ_d(r)) = base.Q2(1, r), so the new server-1 query depends on r
    alone and can be used before the demand is known.
    """

    def __init__(self, base: PirScheme):
        super().__init__(base.N, base.q, base.subpacketization)
        self.base = base
        self.name = f"swap({base.name})"

    @property
    def randomness_space(self):
        return self.base.randomness_space

    @cached_property
    def _sigma(self) -> Dict[int, Dict[Randomness, Randomness]]:
        space = self.base.randomness_space
        reference: Dict[Query, List[Randomness]] = {}
        for r in space:
            reference.setdefault(self.base._queries(1, r)[1], []).append(r)

        sigma = {}
        for d in range(1, self.N + 1):
            grouped: Dict[Query, List[Randomness]] = {}
            for r in space:
                grouped.setdefault(self.base._queries(d, r)[1], []).append(r)
            if {k: len(v) for k, v in grouped.items()} != {k: len(v) for k, v in reference.items()}:
                raise SchemeConfigError(
                    f"{self.base.name}: server-2 query law depends on the demand; roles cannot be swapped",
                    details={'d': d}
                )
            sigma[d] = {
                r: grouped[query][index]
                for query, members in reference.items()
                for index, r in enumerate(members)
            }
        return sigma

    def _queries(self, d, r):
        aligned = self._sigma[d][r]
        return self.base._queries(1, r)[1], self.base._queries(d, aligned)[0]

    def answer_matrix(self, server, query):
        return self.base.answer_matrix(3 - server, query)


def swap_roles(scheme: PirScheme) -> SwappedPirScheme:
    return SwappedPirScheme(scheme)


class TimeSharedPirScheme(PirScheme):
    """
    Messages cut into b blocks: the first a blocks run ``first`` under r1,
    the remaining blocks run ``second`` under r2.
    """

    def __init__(self, first: PirScheme, second: PirScheme, a: int, b: int):
        if first.N != second.N or first.subpacketization != second.subpacketization:
            raise SchemeConfigError("Time-shared schemes must share N and F'")
        super().__init__(first.N, first.q, first.subpacketization * b)
        self.first = first
        self.second = second
        self.a = a
        self.b = b
        self.name = f"{first.name}:ts:{a}/{b}"

    @cached_property
    def randomness_space(self):
        return tuple(itertools.product(self.first.randomness_space, self.second.randomness_space))

    def _queries(self, d, r):
        r1, r2 = r
        q1a, q2a = self.first._queries(d, r1)
        q1b, q2b = self.second._queries(d, r2)
        return (q1a, q1b), (q2a, q2b)

    def _block_columns(self, block: int) -> np.ndarray:
        base = self.first.subpacketization
        n = np.arange(self.N).repeat(base)
        f = np.tile(np.arange(base), self.N)
        return n * self.subpacketization + block * base + f

    def answer_matrix(self, server, query):
        part_first, part_second = query
        blocks = []
        for block in range(self.b):
            scheme, part = (self.first, part_first) if block < self.a else (self.second, part_second)
            local = scheme.answer_matrix(server, part)
            matrix = self.GF.Zeros((local.shape[0], self.width))
            matrix[:, self._block_columns(block)] = local
            blocks.append(matrix)
        return np.concatenate(blocks)


def check_message_length(scheme: PirScheme, mu, message_len: int):
    """Messages of length L split into b blocks of F' symbols when mu = a/b."""
    blocks = Fraction(mu).denominator
    if message_len % (blocks * scheme.subpacketization):
        raise SchemeConfigError(
            f"Message length {message_len} not divisible by {blocks * scheme.subpacketization}",
            details={'message_len': message_len, 'blocks': blocks}
        )


def time_share(scheme: PirScheme, mu, message_len: int = None) -> PirScheme:
    """
    Run ``scheme`` on a fraction mu of each message and its role-swapped
    version on the rest.
    """
    mu = Fraction(mu)
    if not 0 <= mu <= 1:
        raise SchemeConfigError(f"Time-sharing fraction {mu} outside [0, 1]", details={'mu': str(mu)})

    b = mu.denominator
    if message_len is not None:
        check_message_length(scheme, mu, message_len)

    if mu == 1:
        return scheme
    if mu == 0:
        return swap_roles(scheme)
    return TimeSharedPirScheme(scheme, swap_roles(scheme), mu.numerator, b)


def cc2pir_man(N: int, t: int, q: int = 2) -> CachingToPir:
    from .caching import ManScheme

    return caching_to_pir(ManScheme(N, N, t, q))


def man_costs(N: int, t: int) -> Tuple[Fraction, Fraction]:
    """Closed-form download costs of the caching-to-PIR scheme built from MAN."""
    return Fraction(t), Fraction(binom(N, t + 1), binom(N, t))
