"""
Run configuration and orchestration behind the management commands.

A run is configured by an optional JSON file whose keys match the
``RunConfig`` fields; explicit command options override the file.
Rationals travel as "num/den" strings.
"""
import json
import logging
import os
from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from django.conf import settings

from .algebra import TradeoffPoint, lower_convex_envelope
from .auditor import FAULTS, AuditReport, WorldSpec, check_pir_privacy, check_udiq, run_audit
from .bounds import (
    CurveRow,
    compare_curves,
    lower_bound,
    meets_total_cost_bound,
    pir_capacity,
    recovery_sets,
    sqrt_ceiling,
    total_cost_bound,
)
from .caching import TRADEOFF_GENERATORS, tradeoff_points
from .exceptions import RecoverySetError, ValidationError
from .export import TRADEOFF_HEADERS, ExportService, curve_rows, rational_str, tradeoff_rows
from .pir import PirScheme, check_message_length, man_costs
from .registry import is_pir_id, parse_pir
from .utils.validation_utils import ValidationMixin

logger = logging.getLogger(__name__)

COMMANDS = ('audit', 'tradeoff', 'pir', 'compare')
CLOSURE_WIDTH = 64


@dataclass
class RunConfig(ValidationMixin):
    command: str
    scheme: Optional[str] = None
    generator: Optional[str] = None
    N: Optional[int] = None
    K: int = 1
    t: Optional[int] = None
    q: Optional[int] = None
    mu: Fraction = Fraction(1)
    symbol_len: Optional[int] = None
    seed: Optional[int] = None
    output: Optional[str] = None
    format: Optional[str] = None
    checks: Tuple[str, ...] = ()
    fault: Optional[str] = None
    count_metadata: bool = False
    budget: Optional[int] = None
    tables_dir: Optional[str] = None
    transcripts: Optional[str] = None
    extra: Dict[str, Any] = dataclass_field(default_factory=dict)

    RULES = {
        'scheme': {'type': 'scheme'},
        'generator': {'type': 'choice', 'choices': list(TRADEOFF_GENERATORS)},
        'N': {'type': 'integer', 'min_value': 1},
        'K': {'type': 'integer', 'min_value': 1},
        't': {'type': 'integer', 'min_value': 0},
        'q': {'type': 'prime'},
        'mu': {'type': 'rational', 'min_value': 0, 'max_value': 1},
        'symbol_len': {'type': 'integer', 'min_value': 1},
        'seed': {'type': 'integer'},
        'format': {'type': 'choice', 'choices': ['csv', 'json']},
        'fault': {'type': 'choice', 'choices': list(FAULTS)},
        'budget': {'type': 'integer', 'min_value': 1},
        'output': {'type': 'string'},
        'tables_dir': {'type': 'string'},
        'transcripts': {'type': 'string'},
    }

    @classmethod
    def from_sources(cls, command: str, config_path: Optional[str] = None, **overrides) -> 'RunConfig':
        """Merge a JSON config file with explicit options (options win)."""
        if command not in COMMANDS:
            raise ValidationError(f"Unknown command '{command}'", details={'choices': list(COMMANDS)})

        data: Dict[str, Any] = {}
        if config_path:
            try:
                with open(config_path, encoding='utf-8') as handle:
                    data = json.load(handle)
            except (OSError, json.JSONDecodeError) as e:
                raise ValidationError(f"Cannot read config '{config_path}': {e}", details={'path': config_path})
            if not isinstance(data, dict):
                raise ValidationError(f"Config '{config_path}' must hold a JSON object")

        data.update({key: value for key, value in overrides.items() if value is not None})
        data.pop('command', None)

        known = set(cls.__dataclass_fields__) - {'command', 'extra'}
        extra = {key: data.pop(key) for key in list(data) if key not in known}
        if extra:
            logger.warning(f"Ignoring unknown config keys: {sorted(extra)}")

        config = cls(command=command, extra=extra)
        validated = config.validated_or_raise(data, cls.RULES)
        for key, value in data.items():
            setattr(config, key, validated.get(key, value))
        config.checks = tuple(config.checks or ())
        config.count_metadata = bool(config.count_metadata)
        return config

    def require(self, *names: str):
        missing = [name for name in names if getattr(self, name) is None]
        if missing:
            raise ValidationError(
                f"'{self.command}' needs {', '.join(missing)}",
                details={'missing': missing}
            )

    def world_spec(self) -> WorldSpec:
        self.require('scheme', 'N')
        if self.seed is not None:
            logger.info("Exhaustive audits ignore the seed")
        budget = self.budget or settings.PRIVCACHE_WORLD_BUDGET
        if is_pir_id(self.scheme):
            return WorldSpec(self.scheme, self.N, q=self.q, budget=budget, fault=self.fault)
        self.require('t')
        return WorldSpec(self.scheme, self.N, self.K, self.t, self.q, budget, self.fault, self.count_metadata)


def _jsonable(value):
    if isinstance(value, (tuple, list)):
        return [_jsonable(item) for item in value]
    if isinstance(value, Fraction):
        return rational_str(value)
    return value


def cmd_audit(config: RunConfig, exporter: Optional[ExportService] = None) -> AuditReport:
    """Run the audit and write the JSON report (and the tables when asked)."""
    exporter = exporter or ExportService()
    spec = config.world_spec()
    report = run_audit(spec, config.checks or None)

    if config.output:
        exporter.export_to_json(config.output, report.as_dict())
    if config.tables_dir:
        for name, table in sorted(report.tables.items()):
            exporter.export_table(os.path.join(config.tables_dir, f"{name}.csv"), table)
    return report


def tradeoff_envelope(config: RunConfig) -> List[TradeoffPoint]:
    config.require('generator', 'N')
    pir = None
    if config.generator == 'compose':
        config.require('scheme')
        pir = parse_pir(config.scheme, config.q)
        if config.symbol_len is not None:
            check_message_length(pir, config.mu, config.symbol_len)
    points = tradeoff_points(config.generator, config.N, config.K, config.t, config.mu, pir)
    return lower_convex_envelope(points)


def _tabular(exporter: ExportService, config: RunConfig, headers: Sequence[str], rows: List[List[Any]]) -> str:
    """CSV by default, or a JSON list of records with format='json'."""
    if config.format == 'json':
        records = [dict(zip(headers, row)) for row in rows]
        if config.output:
            exporter.export_to_json(config.output, records)
        return exporter.render_json(records)
    if config.output:
        exporter.export_to_csv(config.output, headers, rows)
    return exporter.render_csv(headers, rows)


def cmd_tradeoff(config: RunConfig, exporter: Optional[ExportService] = None) -> str:
    """Lower convex envelope of a generator's points."""
    exporter = exporter or ExportService()
    rows = tradeoff_rows(tradeoff_envelope(config))
    return _tabular(exporter, config, TRADEOFF_HEADERS, rows)


def _cost_reference(N: int) -> Dict[str, str]:
    """MAN-based PIR at t = ceil(sqrt(N)), whose total cost is within a factor 2 of the bound."""
    t = sqrt_ceiling(N)
    return {
        'scheme': f'cc2pir:man:{N}:{t}',
        'total_cost': rational_str(sum(man_costs(N, t))),
    }


def pir_report(pir: PirScheme) -> Dict[str, Any]:
    """Costs, privacy, UDIQ, recovery sets and converse bounds of a PIR scheme."""
    R1, R2 = pir.download_costs()
    total = R1 + R2
    privacy = check_pir_privacy(pir)
    udiq = check_udiq(pir)

    report: Dict[str, Any] = {
        'scheme': pir.name,
        'N': pir.N,
        'q': pir.q,
        'costs': {'R_D1': rational_str(R1), 'R_D2': rational_str(R2), 'subpacketization': pir.subpacketization},
        'total_cost': rational_str(total),
        'capacity': rational_str(pir_capacity(pir.N, 2)),
        'pir_privacy': privacy.verdict,
        'udiq': {
            'marginal': udiq.verdict,
            'bits': round(udiq.marginal.bits, 12),
            'per_demand': {str(n): round(bits, 12) for n, bits in udiq.per_demand.items()},
        },
        'total_cost_bound': {
            'bound': round(total_cost_bound(pir.N), 12),
            'meets': meets_total_cost_bound(pir.N, total),
            'reference': _cost_reference(pir.N),
        },
    }

    try:
        rs = recovery_sets(pir, closure=pir.width <= CLOSURE_WIDTH)
    except RecoverySetError as error:
        logger.info(f"{pir.name}: outside the converse's hypotheses ({error.message})")
        report['recovery_sets'] = {'applicable': False, 'reason': error.message}
        return report

    bound = lower_bound(rs, R1, R2, pir.N)
    report['recovery_sets'] = dict(rs.as_dict(), applicable=True)
    report['lower_bound'] = {
        'lhs_min': rational_str(bound.lhs_min),
        'alpha': list(bound.alpha),
        'passes': bound.passes,
        'tight': bound.tight,
    }
    return report


def transcript_rows(pir: PirScheme) -> List[Dict[str, Any]]:
    return [
        {
            'd': row.d,
            'r': _jsonable(row.r),
            'Q1': _jsonable(row.Q1),
            'Q2': _jsonable(row.Q2),
            'A1': pir.describe_query(1, row.Q1),
            'A2': pir.describe_query(2, row.Q2),
        }
        for row in pir.transcripts
    ]


def cmd_pir(config: RunConfig, exporter: Optional[ExportService] = None) -> Dict[str, Any]:
    exporter = exporter or ExportService()
    config.require('scheme')
    pir = parse_pir(config.scheme, config.q)
    if config.N is not None and config.N != pir.N:
        raise ValidationError(f"'{config.scheme}' has N={pir.N}, got N={config.N}")

    report = pir_report(pir)
    if config.output:
        exporter.export_to_json(config.output, report)
    if config.transcripts:
        exporter.export_to_json(config.transcripts, transcript_rows(pir))
    return report


def cmd_compare(config: RunConfig, exporter: Optional[ExportService] = None) -> Tuple[List[CurveRow], str]:
    exporter = exporter or ExportService()
    config.require('N')
    rows = compare_curves(config.N, config.K)
    headers, body = curve_rows(rows)
    return rows, _tabular(exporter, config, headers, body)

