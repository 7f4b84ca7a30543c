"""
Tests de la configuration des exécutions et des orchestrateurs
"""
import json
import os
from fractions import Fraction

from django.test import SimpleTestCase, override_settings

from ..cli import RunConfig, cmd_audit, cmd_compare, cmd_pir, cmd_tradeoff, pir_report, transcript_rows
from ..exceptions import SchemeConfigError, ValidationError
from ..pir import pk_pir, signed4, tsc2
from .utils.base_test import AuditTestMixin


class RunConfigTest(AuditTestMixin, SimpleTestCase):
    """Tests de la fusion fichier JSON + options"""

    def setUp(self):
        super().setUp()
        self.directory = self.make_temp_dir()

    def write_config(self, data):
        path = os.path.join(self.directory, 'run.json')
        with open(path, 'w', encoding='utf-8') as handle:
            json.dump(data, handle)
        return path

    def test_options_override_file(self):
        path = self.write_config({'generator': 'cor1', 'N': 2, 'K': 2, 't': 1, 'mu': '1/2', 'color': 'red'})
        config = RunConfig.from_sources('tradeoff', path, t=0, K=None)
        self.assertEqual((config.N, config.K, config.t), (2, 2, 0))
        self.assertEqual(config.mu, Fraction(1, 2))
        self.assertEqual(config.extra, {'color': 'red'})

    def test_float_rational_refused(self):
        path = self.write_config({'generator': 'cor1', 'N': 2, 'mu': 0.5})
        with self.assertRaises(ValidationError) as context:
            RunConfig.from_sources('tradeoff', path)
        self.assertIn('mu', context.exception.details['errors'])

    def test_unreadable_config(self):
        with self.assertRaises(ValidationError):
            RunConfig.from_sources('audit', os.path.join(self.directory, 'missing.json'))
        with self.assertRaises(ValidationError):
            RunConfig.from_sources('audit', self.write_config([1, 2]))

    def test_unknown_command(self):
        with self.assertRaises(ValidationError):
            RunConfig.from_sources('plot')

    def test_require(self):
        config = RunConfig.from_sources('tradeoff', N=2)
        with self.assertRaises(ValidationError) as context:
            config.require('generator', 'N')
        self.assertEqual(context.exception.details, {'missing': ['generator']})

    @override_settings(PRIVCACHE_WORLD_BUDGET=1000)
    def test_world_spec(self):
        spec = RunConfig.from_sources('audit', scheme='tsc2', N=2, K=5, t=3).world_spec()
        self.assertEqual((spec.K, spec.t, spec.budget), (1, 0, 1000))

        spec = RunConfig.from_sources('audit', scheme='vu', N=2, K=2, t=1, budget=50).world_spec()
        self.assertEqual((spec.K, spec.t, spec.budget), (2, 1, 50))

    def test_caching_spec_needs_t(self):
        with self.assertRaises(ValidationError):
            RunConfig.from_sources('audit', scheme='vu', N=2).world_spec()


class CommandFunctionsTest(AuditTestMixin, SimpleTestCase):

    def test_cmd_audit_writes_report_and_tables(self):
        directory = self.make_temp_dir()
        config = RunConfig.from_sources(
            'audit', scheme='tsc2', N=2,
            output=os.path.join(directory, 'report.json'), tables_dir=os.path.join(directory, 'tables'),
        )
        report = cmd_audit(config)
        self.assertTrue(report.passed)
        with open(config.output, encoding='utf-8') as handle:
            self.assertEqual(json.load(handle)['scheme'], 'tsc2')
        self.assertTrue(os.path.exists(os.path.join(directory, 'tables', 'queries.csv')))

    def test_tradeoff_csv(self):
        config = RunConfig.from_sources('tradeoff', generator='cor1', N=2, K=2, t=1)
        self.assertEqual(
            cmd_tradeoff(config),
            'M_num,M_den,R_num,R_den,scheme,subpacketization\n11,8,3,8,cor1,2\n'
        )

    def test_tradeoff_json_records(self):
        config = RunConfig.from_sources('tradeoff', generator='cor_smallN', N=4, K=2, t=1, format='json')
        records = json.loads(cmd_tradeoff(config))
        self.assertEqual(records, [{
            'M_num': 5, 'M_den': 2, 'R_num': 1, 'R_den': 2,
            'scheme': 'cor_smallN', 'subpacketization': 2,
        }])

    def test_tradeoff_symbol_length_divisibility(self):
        config = RunConfig.from_sources(
            'tradeoff', generator='compose', scheme='tsc2', N=2, K=2, mu='1/2', symbol_len=3
        )
        with self.assertRaises(SchemeConfigError):
            cmd_tradeoff(config)

    def test_pir_report(self):
        report = pir_report(tsc2())
        self.assertEqual(report['costs'], {'R_D1': '1/2', 'R_D2': '1/1', 'subpacketization': 1})
        self.assertEqual(report['capacity'], '3/2')
        self.assertEqual(report['pir_privacy'], 'pass')
        self.assertTrue(report['total_cost_bound']['meets'])
        self.assertEqual(report['total_cost_bound']['reference'], {'scheme': 'cc2pir:man:2:2', 'total_cost': '2/1'})
        self.assertTrue(report['recovery_sets']['applicable'])
        self.assertEqual(report['lower_bound'], {'lhs_min': '2/1', 'alpha': [2, 1], 'passes': True, 'tight': True})

    def test_pir_report_reference_scheme(self):
        bound = pir_report(signed4())['total_cost_bound']
        self.assertEqual(bound['reference'], {'scheme': 'cc2pir:man:4:2', 'total_cost': '8/3'})
        self.assertEqual(bound['bound'], round(4 / 3, 12))

    def test_pir_report_outside_converse(self):
        report = pir_report(pk_pir(3, 2))
        self.assertFalse(report['recovery_sets']['applicable'])
        self.assertNotIn('lower_bound', report)
        self.assertEqual(report['udiq']['marginal'], 'fail')

    def test_transcripts(self):
        rows = transcript_rows(tsc2())
        self.assertEqual(len(rows), 4)
        self.assertEqual(rows[0], {'d': 1, 'r': 0, 'Q1': 1, 'Q2': 1, 'A1': '0', 'A2': 'W1'})

    def test_pk_transcripts_are_lists(self):
        row = transcript_rows(pk_pir(3, 2))[0]
        self.assertIsInstance(row['Q1'], list)

    def test_cmd_pir_checks_size(self):
        with self.assertRaises(ValidationError):
            cmd_pir(RunConfig.from_sources('pir', scheme='tsc2', N=3))

    def test_cmd_compare(self):
        rows, content = cmd_compare(RunConfig.from_sources('compare', N=2, K=2))
        self.assertTrue(content.startswith('M_num,M_den,R_vu_num,R_vu_den,R_cor1_num,R_cor1_den\n0,1,2,1,2,1\n'))
        self.assertEqual(len(content.strip().split('\n')), len(rows) + 1)
