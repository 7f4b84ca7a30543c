"""
Tests for the exception hierarchy and error context
"""
from django.test import SimpleTestCase

from ..exceptions import (
    BudgetExceededError,
    ErrorContext,
    ErrorHandler,
    PrivcacheBaseException,
    RecoverySetError,
    ValidationError,
)


class ExceptionHierarchyTest(SimpleTestCase):

    def test_default_code_is_class_name(self):
        error = BudgetExceededError("too many worlds", details={'worlds': 10, 'budget': 5})
        self.assertIsInstance(error, PrivcacheBaseException)
        self.assertEqual(error.code, 'BudgetExceededError')
        self.assertEqual(error.details['budget'], 5)
        self.assertEqual(str(error), "too many worlds")

    def test_explicit_code(self):
        error = ValidationError("bad", code='INVALID_PARAMETER')
        self.assertEqual(error.code, 'INVALID_PARAMETER')
        self.assertEqual(error.details, {})


class ErrorContextTest(SimpleTestCase):
    """Tests du gestionnaire de contexte"""

    def test_success(self):
        with ErrorContext('audit', 'vu') as context:
            pass
        self.assertTrue(context.success)

    def test_failure_is_logged_and_reraised(self):
        with self.assertLogs('privcache.exceptions', level='ERROR') as logs:
            with self.assertRaises(RecoverySetError):
                with ErrorContext('pir', 'pk:3:2') as context:
                    raise RecoverySetError("N1=4 > N", details={'N1': 4})
        self.assertFalse(context.success)
        self.assertIn('[RecoverySetError]', logs.output[0])

    def test_unexpected_error(self):
        with self.assertLogs('privcache.exceptions', level='ERROR') as logs:
            ErrorHandler.log_error(KeyError('M1'), {'operation': 'audit'})
        self.assertIn('Unexpected Error', logs.output[0])
