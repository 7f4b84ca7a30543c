"""
Tests pour le système de métriques
"""
import threading

from django.test import SimpleTestCase

from ..metrics import AuditMetrics, MetricsCollector, count_calls, get_metrics_collector, time_it
from ..registry import parse_pir


class MetricsCollectorTest(SimpleTestCase):
    """Tests pour le collecteur de métriques"""

    def setUp(self):
        self.collector = MetricsCollector(max_samples=100)

    def test_record_timing(self):
        """Test d'enregistrement de timing"""
        self.collector.record_timing("test.operation", 0.5, {"service": "test"})

        stats = self.collector.get_timing_stats("test.operation", window_minutes=60)

        self.assertEqual(stats['count'], 1)
        self.assertEqual(stats['total'], 0.5)
        self.assertEqual(stats['min'], 0.5)
        self.assertEqual(stats['max'], 0.5)

    def test_increment_counter(self):
        """Test d'incrémentation de compteur"""
        self.collector.increment_counter("test.counter", 5, {"type": "success"})
        self.collector.increment_counter("test.counter", 3, {"type": "success"})

        self.assertEqual(self.collector.get_counter_stats()["test.counter[type=success]"], 8)

    def test_set_gauge(self):
        self.collector.set_gauge("audit.rows", 42, {"scheme": "vu"})
        self.assertEqual(self.collector.get_gauge_stats()["audit.rows[scheme=vu]"], 42)

    def test_unknown_timing(self):
        self.assertEqual(self.collector.get_timing_stats("missing"), {})

    def test_percentile_calculation(self):
        """Test du calcul des percentiles"""
        for value in range(1, 101):
            self.collector.record_timing("percentile.test", value / 100.0)

        stats = self.collector.get_timing_stats("percentile.test", window_minutes=60)

        self.assertAlmostEqual(stats['p50'], 0.5, places=1)
        self.assertAlmostEqual(stats['p95'], 0.95, places=1)

    def test_max_samples(self):
        for _ in range(150):
            self.collector.record_timing("bounded", 0.01)
        self.assertEqual(self.collector.get_timing_stats("bounded")['count'], 100)

    def test_thread_safety(self):
        """Test de la thread safety du collecteur"""
        def worker():
            for _ in range(100):
                self.collector.increment_counter("thread.counter", 1)

        threads = [threading.Thread(target=worker) for _ in range(5)]
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()

        self.assertEqual(self.collector.get_counter_stats()["thread.counter"], 500)

    def test_reset_all(self):
        self.collector.record_timing("a", 0.1)
        self.collector.increment_counter("b")
        self.collector.reset_all()
        self.assertEqual(self.collector.timing_names(), [])
        self.assertEqual(self.collector.get_counter_stats(), {})


class DecoratorsTest(SimpleTestCase):
    """Tests des décorateurs time_it et count_calls"""

    def setUp(self):
        get_metrics_collector().reset_all()

    def test_time_it_records_errors(self):
        @time_it('test.error.duration')
        def failing_function():
            raise ValueError("test error")

        with self.assertRaises(ValueError):
            failing_function()

        stats = get_metrics_collector().get_timing_stats('test.error.duration')
        self.assertEqual(stats['count'], 1)

    def test_count_calls_decorator(self):
        @count_calls('test.calls.count')
        def test_function(should_fail=False):
            if should_fail:
                raise ValueError("test error")
            return "success"

        test_function()
        test_function()
        with self.assertRaises(ValueError):
            test_function(should_fail=True)

        counters = get_metrics_collector().get_counter_stats()
        self.assertEqual(counters['test.calls.count[function=test_function,status=success]'], 2)
        self.assertEqual(counters['test.calls.count[function=test_function,status=error]'], 1)

    def test_registry_lookups_are_counted(self):
        parse_pir('tsc2')
        counters = get_metrics_collector().get_counter_stats()
        self.assertEqual(counters['registry.parse_pir[function=parse_pir,status=success]'], 1)


class AuditMetricsTest(SimpleTestCase):

    def setUp(self):
        get_metrics_collector().reset_all()

    def test_record_check(self):
        AuditMetrics.record_check('decodability', 'pass')
        AuditMetrics.record_check('decodability', 'pass')
        counters = get_metrics_collector().get_counter_stats()
        self.assertEqual(counters['audit.check.count[check=decodability,verdict=pass]'], 2)

    def test_summary(self):
        AuditMetrics.record_enumeration('vu', 4096, 200, 0.25)
        lines = AuditMetrics.summary()
        self.assertTrue(any(line.startswith('audit.enumeration.duration: 1 appels') for line in lines))
        self.assertIn('audit.enumeration.worlds[scheme=vu]: 4096', lines)
