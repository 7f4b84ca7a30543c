"""
Scheme identifiers.

PIR ids: ``tsc2``, ``xor3``, ``signed4``, ``pk:N:q``, ``cc2pir:man:N:t``,
optionally followed by ``:ts:a/b`` to time-share with the role-swapped
scheme. Caching ids: ``man``, ``yma``, ``vu``, ``compose:<pir-id>``.
"""
import logging
from fractions import Fraction
from typing import Optional, Union

from django.conf import settings

from .caching import CachingSystem, ComposedScheme, ManScheme, VirtualUsersScheme
from .exceptions import SchemeConfigError, ValidationError
from .metrics import count_calls
from .pir import PirScheme, cc2pir_man, pk_pir, signed4, time_share, tsc2, xor3

logger = logging.getLogger(__name__)

TABLE_SCHEMES = {
    'tsc2': (tsc2, 2),
    'xor3': (xor3, 2),
    'signed4': (signed4, 3),
}
CACHING_SCHEMES = ('man', 'yma', 'vu')


def _int(value: str, label: str, scheme_id: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ValidationError(f"Invalid {label} '{value}' in scheme id '{scheme_id}'")


@count_calls('registry.parse_pir')
def parse_pir(scheme_id: str, q: Optional[int] = None) -> PirScheme:
    base_id, _, share = scheme_id.partition(':ts:')
    parts = base_id.split(':')
    name = parts[0]

    if name in TABLE_SCHEMES and len(parts) == 1:
        factory, default_q = TABLE_SCHEMES[name]
        scheme = factory(q or default_q)
    elif name == 'pk' and len(parts) == 3:
        scheme = pk_pir(_int(parts[1], 'N', scheme_id), _int(parts[2], 'q', scheme_id))
    elif name == 'cc2pir' and len(parts) == 4 and parts[1] == 'man':
        scheme = cc2pir_man(_int(parts[2], 'N', scheme_id), _int(parts[3], 't', scheme_id), q or 2)
    else:
        raise ValidationError(
            f"Unknown PIR scheme id '{scheme_id}'",
            details={'scheme': scheme_id, 'choices': ['tsc2', 'xor3', 'signed4', 'pk:N:q', 'cc2pir:man:N:t']}
        )

    if share:
        try:
            mu = Fraction(share)
        except (ValueError, ZeroDivisionError):
            raise ValidationError(f"Invalid time-sharing fraction '{share}' in '{scheme_id}'")
        scheme = time_share(scheme, mu)
    return scheme


def is_pir_id(scheme_id: str) -> bool:
    return not (scheme_id in CACHING_SCHEMES or scheme_id.startswith('compose:'))


@count_calls('registry.build_scheme')
def build_scheme(scheme_id: str, N: int, K: int = 1, t: int = 0,
                 q: Optional[int] = None) -> Union[PirScheme, CachingSystem]:
    """Instantiate a PIR scheme or a caching system and check N against it."""
    default_q = getattr(settings, 'PRIVCACHE_DEFAULT_Q', 2)
    if scheme_id in ('man', 'yma'):
        return ManScheme(N, K, t, q or default_q, delivery=scheme_id)
    if scheme_id == 'vu':
        return VirtualUsersScheme(N, K, t, q or default_q)

    if scheme_id.startswith('compose:'):
        pir = parse_pir(scheme_id[len('compose:'):], q)
        system = ComposedScheme(pir, K, t)
    else:
        system = parse_pir(scheme_id, q)

    if system.N != N:
        raise SchemeConfigError(
            f"Scheme '{scheme_id}' has N={system.N}, requested N={N}",
            details={'scheme': scheme_id, 'N': N}
        )
    return system
