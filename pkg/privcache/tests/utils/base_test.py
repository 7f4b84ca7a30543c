"""
Base test mixins shared by the privcache suite.
"""
import tempfile
from fractions import Fraction

from privcache.auditor import _build, world_model, world_table
from privcache.metrics import get_metrics_collector


class AuditTestMixin:
    """
    Exact-rational assertions, temporary directories and cache resets.

    Use with django.test.SimpleTestCase.
    """

    def setUp(self):
        super().setUp()
        get_metrics_collector().reset_all()

    def tearDown(self):
        world_table.cache_clear()
        world_model.cache_clear()
        _build.cache_clear()
        super().tearDown()

    def assertRational(self, value, expected):
        """Exact comparison; accepts Fraction, int or 'num/den' strings."""
        self.assertIsInstance(value, (Fraction, int, str))
        self.assertEqual(Fraction(value), Fraction(expected))

    def assertPoint(self, point, M, R, subpacketization=None):
        self.assertRational(point.M, M)
        self.assertRational(point.R, R)
        if subpacketization is not None:
            self.assertEqual(point.subpacketization, subpacketization)

    def make_temp_dir(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        return directory.name
