"""
Test data factories for libraries and audit specifications.
"""
import numpy as np

from privcache.algebra import Library
from privcache.auditor import WorldSpec

PIR_SIZES = {
    'tsc2': 2,
    'xor3': 3,
    'signed4': 4,
}


class LibraryFactory:
    """Factory for Library instances with deterministic contents."""

    @staticmethod
    def create(N=2, F=1, q=2, L=1, seed=0):
        """Random library of N files, F segments, L symbols per segment."""
        rng = np.random.default_rng(seed)
        return Library.from_values(rng.integers(0, q, size=(N, F, L)), q)

    @staticmethod
    def from_rows(rows, q=2):
        """One symbol per segment: rows[n][f] is segment f of file n+1."""
        return Library.from_values(rows, q)

    @staticmethod
    def symbolic(N=2, F=1, q=2):
        return Library.symbolic(N, F, q)


class WorldSpecFactory:
    """Factory for WorldSpec with the small parameters the suite audits."""

    @staticmethod
    def create(scheme='man', N=2, K=2, t=1, **kwargs):
        return WorldSpec(scheme, N, K, t, **kwargs)

    @staticmethod
    def pir(scheme='tsc2', N=None, **kwargs):
        if N is None:
            N = PIR_SIZES.get(scheme) or int(scheme.split(':')[1])
        return WorldSpec(scheme, N, **kwargs)
