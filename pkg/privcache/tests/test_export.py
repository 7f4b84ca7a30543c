"""
Tests du service d'export
"""
import json
import os
from fractions import Fraction

from django.test import SimpleTestCase

from ..algebra import DistributionTable, TradeoffPoint
from ..bounds import CurveRow
from ..export import ExportService, curve_rows, rational_str, table_rows, tradeoff_rows
from .utils.base_test import AuditTestMixin


class ExportHelpersTest(SimpleTestCase):

    def test_rational_str(self):
        self.assertEqual(rational_str(Fraction(6, 8)), '3/4')
        self.assertEqual(rational_str(2), '2/1')

    def test_tradeoff_rows(self):
        points = [TradeoffPoint(Fraction(11, 8), Fraction(3, 8), 2, 'cor1')]
        self.assertEqual(tradeoff_rows(points), [[11, 8, 3, 8, 'cor1', 2]])
        self.assertEqual(tradeoff_rows(points, scheme='other')[0][4], 'other')

    def test_curve_rows_leave_undefined_cells_empty(self):
        headers, body = curve_rows([CurveRow(Fraction(0), None, Fraction(2))])
        self.assertEqual(headers[:2], ['M_num', 'M_den'])
        self.assertEqual(body, [[0, 1, '', '', 2, 1]])

    def test_table_rows(self):
        table = DistributionTable(('X', 'Y'), [[0, 1], [1, 0], [1, 0]], [1, 1, 2])
        headers, body = table_rows(table)
        self.assertEqual(headers, ['X', 'Y', 'num', 'den'])
        self.assertEqual(body, [[0, 1, 1, 4], [1, 0, 3, 4]])


class ExportServiceTest(AuditTestMixin, SimpleTestCase):
    """Tests de l'écriture des fichiers"""

    def setUp(self):
        super().setUp()
        self.service = ExportService()
        self.directory = self.make_temp_dir()

    def test_csv_uses_unix_newlines(self):
        self.assertEqual(ExportService.render_csv(['a', 'b'], [[1, 2]]), 'a,b\n1,2\n')

    def test_json_is_sorted(self):
        self.assertEqual(ExportService.render_json({'b': 1, 'a': 'é'}), '{\n  "a": "é",\n  "b": 1\n}\n')

    def test_export_creates_parents(self):
        path = os.path.join(self.directory, 'nested', 'report.json')
        file_path, size = self.service.export_to_json(path, {'passed': True})
        self.assertEqual(file_path, path)
        self.assertEqual(size, os.path.getsize(path))
        with open(path, encoding='utf-8') as handle:
            self.assertEqual(json.load(handle), {'passed': True})

    def test_export_is_deterministic(self):
        path = os.path.join(self.directory, 'curve.csv')
        self.service.export_to_csv(path, ['M'], [[1]])
        with open(path, encoding='utf-8') as handle:
            first = handle.read()
        self.service.export_to_csv(path, ['M'], [[1]])
        with open(path, encoding='utf-8') as handle:
            self.assertEqual(handle.read(), first)

    def test_export_table(self):
        path = os.path.join(self.directory, 'worlds.csv')
        self.service.export_table(path, DistributionTable(('X',), [[0]], [3]))
        with open(path, encoding='utf-8') as handle:
            self.assertEqual(handle.read(), 'X,num,den\n0,1,1\n')
