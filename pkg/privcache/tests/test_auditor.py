"""
Tests de l'auditeur : énumération des mondes et vérifications exactes
"""
from fractions import Fraction
from unittest.mock import patch

from django.test import SimpleTestCase

from ..auditor import (
    WorldSpec,
    check_cache_privacy,
    check_decodability,
    check_demand_privacy,
    check_pir_privacy,
    check_udiq,
    default_variables,
    enumerate_worlds,
    leakage_epsilon,
    measure_load_memory,
    partition_ranges,
    pk_leakage_closed_form,
    query_table,
    run_audit,
)
from ..exceptions import BudgetExceededError, SchemeConfigError, ValidationError
from ..metrics import get_metrics_collector
from ..pir import TablePirScheme, cc2pir_man, pk_pir, signed4, tsc2, xor3
from ..tasks import count_world_partition
from .utils.base_test import AuditTestMixin
from .utils.factories import WorldSpecFactory


def verdicts(report):
    return {(check.name, check.user): check.verdict for check in report.checks}


class WorldSpecTest(AuditTestMixin, SimpleTestCase):

    def test_counts(self):
        spec = WorldSpecFactory.create('vu', 2, 2, 1)
        self.assertEqual(spec.library_count(), 256)
        self.assertEqual(spec.pair_count(), 16)
        self.assertEqual(spec.world_count(), 4096)

    def test_pir_counts(self):
        spec = WorldSpecFactory.pir('xor3')
        self.assertTrue(spec.is_pir)
        self.assertEqual(spec.world_count(), 8 * 9)

    def test_budget(self):
        spec = WorldSpecFactory.create('vu', 2, 2, 1, budget=100)
        with self.assertRaises(BudgetExceededError) as context:
            spec.check_budget()
        self.assertEqual(context.exception.details, {'worlds': 4096, 'budget': 100})

    def test_payload_round_trip(self):
        spec = WorldSpecFactory.create('compose:tsc2', fault='leak_metadata')
        self.assertEqual(WorldSpec.from_payload(spec.as_payload()), spec)

    def test_invalid_fault(self):
        with self.assertRaises(ValidationError):
            WorldSpecFactory.create(fault='drop_payload')

    def test_scheme_size_mismatch(self):
        with self.assertRaises(SchemeConfigError):
            WorldSpecFactory.pir('tsc2', N=3).build()

    def test_default_variables(self):
        self.assertEqual(
            default_variables(WorldSpecFactory.create()),
            ('d', 'd1', 'd2', 'M1', 'M2', 'Z1', 'Z2', 'Xm', 'Xp')
        )
        self.assertEqual(default_variables(WorldSpecFactory.pir()), ('d', 'Q1', 'Q2', 'A1', 'A2'))


class EnumerationTest(AuditTestMixin, SimpleTestCase):
    """Tests de l'énumération partitionnée"""

    def test_partition_ranges(self):
        self.assertEqual(partition_ranges(10, 3), [(0, 3), (3, 6), (6, 10)])
        self.assertEqual(partition_ranges(2, 5), [(0, 1), (1, 2)])

    def test_table_is_independent_of_partitioning(self):
        spec = WorldSpecFactory.create('man', 2, 2, 1)
        single = enumerate_worlds(spec, partitions=1)
        split = enumerate_worlds(spec, partitions=3)
        self.assertEqual(single, split)
        self.assertEqual(single.total, spec.world_count())

    def test_partitions_dispatched_as_tasks(self):
        spec = WorldSpecFactory.create('man', 2, 2, 1)

        def run_eagerly(payload, start, stop):
            return count_world_partition.apply(args=(payload, start, stop))

        with patch('privcache.auditor.count_world_partition') as task:
            task.delay.side_effect = run_eagerly
            table = enumerate_worlds(spec, ['d', 'Xp'], partitions=2)

        self.assertEqual(task.delay.call_count, 2)
        self.assertEqual(table.variables, ('d', 'Xp'))
        self.assertEqual(table.total, 64)

    def test_enumeration_is_timed(self):
        enumerate_worlds(WorldSpecFactory.create('man', 2, 2, 1), ['d'])
        self.assertIn('auditor.enumerate_worlds', get_metrics_collector().timing_names())

    def test_unknown_variable(self):
        with self.assertRaises(ValidationError):
            enumerate_worlds(WorldSpecFactory.create('man', 2, 2, 1), ['Y'], partitions=1)


class CachingAuditTest(AuditTestMixin, SimpleTestCase):
    """Audits of the caching schemes on N = K = 2"""

    def test_virtual_users_pass_everything(self):
        report = run_audit(WorldSpecFactory.create('vu', 2, 2, 1))
        self.assertTrue(report.passed)
        self.assertEqual(set(verdicts(report).values()), {'pass'})
        self.assertRational(report.measurements['M'], Fraction(1, 2))
        self.assertRational(report.measurements['R'], Fraction(5, 4))
        self.assertEqual(report.measurements['formula'], {'M': '1/2', 'R': '5/4'})
        self.assertEqual(report.measurements['leakage'], {'1': 0.0, '2': 0.0})

    def test_composed_example(self):
        """Keys from tsc2 server 1, payloads from server 2"""
        report = run_audit(WorldSpecFactory.create('compose:tsc2', 2, 2, 1))
        self.assertTrue(report.passed)
        self.assertEqual(report.measurements['M'], '5/4')
        self.assertEqual(report.measurements['R'], '1/2')
        self.assertEqual(report.measurements['subpacketization'], 2)

    def test_composed_xor3(self):
        spec = WorldSpecFactory.create('compose:xor3', 3, 2, 1)
        self.assertEqual(check_decodability(spec).verdict, 'pass')
        self.assertEqual(measure_load_memory(spec, with_entropy=False).M, Fraction(2))

    def test_composed_signed4(self):
        report = run_audit(WorldSpecFactory.create('compose:signed4', 4, 2, 1))
        self.assertTrue(report.passed)
        self.assertEqual(set(verdicts(report).values()), {'pass'})
        self.assertEqual((report.measurements['M'], report.measurements['R']), ('5/2', '1/2'))
        self.assertFalse(any(report.measurements['leakage'].values()))

    def test_composed_man_based_pir(self):
        report = run_audit(WorldSpecFactory.create('compose:cc2pir:man:2:1', 2, 2, 1))
        self.assertEqual(set(verdicts(report).values()), {'pass'})
        self.assertEqual((report.measurements['M'], report.measurements['R']), ('3/2', '1/4'))

    def test_composed_privacy_key_leaks_cache(self):
        spec = WorldSpecFactory.create('compose:pk:3:2', 3, 2, 1)
        results = verdicts(run_audit(spec, ['demand_privacy', 'cache_privacy']))
        self.assertEqual(results[('demand_privacy', 1)], 'pass')
        self.assertEqual(results[('demand_privacy', 2)], 'pass')
        cache = check_cache_privacy(spec, 1)
        self.assertEqual(cache.verdict, 'fail')
        self.assertAlmostEqual(cache.bits, 0.415, places=3)
        self.assertAlmostEqual(leakage_epsilon(spec, 1), pk_leakage_closed_form(3, 2), places=9)

    def test_virtual_users_full_memory_point(self):
        report = run_audit(WorldSpecFactory.create('vu', 2, 2, 2))
        self.assertEqual(set(verdicts(report).values()), {'pass'})
        self.assertRational(report.measurements['R'], Fraction(2, 3))

    def test_plain_man_is_not_demand_private(self):
        report = run_audit(WorldSpecFactory.create('man', 2, 2, 1))
        results = verdicts(report)
        self.assertEqual(results[('decodability', None)], 'pass')
        self.assertEqual(results[('demand_privacy', 1)], 'fail')
        self.assertEqual(results[('cache_privacy', 1)], 'pass')
        self.assertFalse(report.passed)
        self.assertEqual(report.failed_checks(), ['demand_privacy'])
        self.assertEqual(report.measurements['R'], '1/2')

    def test_yma_broadcast_size_varies(self):
        report = run_audit(WorldSpecFactory.create('yma', 2, 3, 1), ['constant_broadcast'])
        self.assertEqual(verdicts(report)[('constant_broadcast', None)], 'fail')
        self.assertNotIn('R', report.measurements)

    def test_metadata_counted_in_load(self):
        spec = WorldSpecFactory.create('vu', 2, 2, 1, count_metadata=True)
        measured = measure_load_memory(spec, with_entropy=False)
        self.assertRational(measured.metadata_load, Fraction(1, 2))
        self.assertRational(measured.R, Fraction(7, 4))

    def test_cache_entropy(self):
        measured = measure_load_memory(WorldSpecFactory.create('man', 2, 2, 1))
        self.assertAlmostEqual(measured.cache_entropy[1], 2.0)

    def test_single_user_cache_privacy(self):
        spec = WorldSpecFactory.create('compose:tsc2', 2, 1, 0)
        self.assertEqual(check_cache_privacy(spec, 1).verdict, 'pass')

    def test_user_checks_refuse_pir(self):
        with self.assertRaises(SchemeConfigError):
            check_demand_privacy(WorldSpecFactory.pir(), 1)
        with self.assertRaises(SchemeConfigError):
            measure_load_memory(WorldSpecFactory.pir())

    def test_unknown_check(self):
        with self.assertRaises(ValidationError):
            run_audit(WorldSpecFactory.create('man', 2, 2, 1), ['pir_privacy'])


class FaultInjectionTest(AuditTestMixin, SimpleTestCase):
    """Contrôles négatifs"""

    def test_corrupted_payload_breaks_decoding(self):
        spec = WorldSpecFactory.create('man', 2, 2, 1, fault='corrupt_payload')
        result = check_decodability(spec)
        self.assertEqual(result.verdict, 'fail')
        self.assertGreater(result.details['failures'], 0)

    def test_corrupted_pir_answer(self):
        spec = WorldSpecFactory.pir('tsc2', fault='corrupt_payload')
        self.assertEqual(check_decodability(spec).verdict, 'fail')

    def test_leaked_metadata_breaks_privacy(self):
        spec = WorldSpecFactory.create('vu', 2, 2, 1, fault='leak_metadata')
        result = check_cache_privacy(spec, 1)
        self.assertEqual(result.verdict, 'fail')
        self.assertGreater(result.bits, 0)

    def test_decodability_over_budget_uses_coefficients(self):
        spec = WorldSpecFactory.create('vu', 2, 2, 1, budget=100)
        result = check_decodability(spec)
        self.assertEqual(result.verdict, 'pass')
        self.assertEqual(result.details['columns'], 8)


class PirAuditTest(AuditTestMixin, SimpleTestCase):
    """Tests des vérifications PIR"""

    def test_tsc2_report(self):
        report = run_audit(WorldSpecFactory.pir('tsc2'))
        self.assertTrue(report.passed)
        self.assertEqual(report.measurements['download_costs'], ['1/2', '1/1'])
        self.assertEqual(len(report.tables['queries']), 4)

    def test_query_table(self):
        table = query_table(xor3())
        self.assertEqual(table.variables, ('d', 'Q1', 'Q2'))
        self.assertEqual(table.total, 9)

    def test_demand_revealing_scheme_fails_privacy(self):
        leaky = TablePirScheme(
            'leaky', 2, 2,
            server1={0: 1, 1: 2},
            server2={(0, 1): 1, (1, 1): 1, (0, 2): 2, (1, 2): 2},
            combinations1={1: [], 2: []},
            combinations2={1: [(1, 0)], 2: [(0, 1)]},
        )
        result = check_pir_privacy(leaky)
        self.assertEqual(result.verdict, 'fail')
        self.assertAlmostEqual(result.bits, 1.0)

    def test_udiq(self):
        self.assertEqual(check_udiq(tsc2()).verdict, 'pass')
        udiq = check_udiq(xor3())
        self.assertEqual(udiq.verdict, 'pass')
        self.assertAlmostEqual(udiq.per_demand[1], 1.584962500721156)

    def test_signed4_and_man_based_privacy(self):
        for pir in (signed4(), cc2pir_man(3, 1)):
            self.assertEqual(check_pir_privacy(pir).verdict, 'pass', pir.name)
            self.assertEqual(check_udiq(pir).verdict, 'pass', pir.name)
        per_demand = check_udiq(signed4()).per_demand
        self.assertEqual(sorted(per_demand), [1, 2, 3, 4])
        for bits in per_demand.values():
            self.assertAlmostEqual(bits, 2.0)

    def test_udiq_is_informative_only(self):
        report = run_audit(WorldSpecFactory.pir('pk:3:2'))
        results = verdicts(report)
        self.assertEqual(results[('udiq', None)], 'fail')
        self.assertEqual(results[('pir_privacy', None)], 'pass')
        self.assertTrue(report.passed)

    def test_privacy_key_udiq_bits(self):
        udiq = check_udiq(pk_pir(3, 2))
        self.assertAlmostEqual(udiq.marginal.bits, 2 - 1.584962500721156)


class LeakageTest(AuditTestMixin, SimpleTestCase):

    def test_privacy_key_leakage_matches_closed_form(self):
        spec = WorldSpecFactory.create('compose:pk:3:2', 3, 1, 0)
        epsilon = leakage_epsilon(spec, 1)
        self.assertAlmostEqual(epsilon, pk_leakage_closed_form(3, 2), places=9)
        self.assertAlmostEqual(epsilon, 0.20751874963942, places=9)

    def test_deterministic_metadata(self):
        self.assertIsNone(leakage_epsilon(WorldSpecFactory.create('man', 2, 2, 1), 1))

    def test_closed_form_needs_two_files(self):
        with self.assertRaises(ValidationError):
            pk_leakage_closed_form(1, 2)
