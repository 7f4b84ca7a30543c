"""
Validation utilities for run configurations and command options.

Every validator returns a result dictionary ({'valid', 'value', 'errors'})
so that callers can collect all problems before failing.
"""
import logging
import re
from fractions import Fraction
from typing import Any, Dict, List, Optional, Union

import galois

from privcache.exceptions import ValidationError

logger = logging.getLogger(__name__)


class InputValidator:
    """Centralized validation of integers, rationals, fields and scheme ids."""

    RATIONAL_PATTERN = re.compile(r'^\s*-?\d{1,12}\s*(/\s*\d{1,12}\s*)?$')
    SCHEME_PATTERN = re.compile(r'^[a-z0-9]+(:[a-z0-9]+)*(:ts:\d{1,6}/\d{1,6})?$')

    @classmethod
    def validate_integer(
        cls,
        value: Union[str, int],
        min_value: Optional[int] = None,
        max_value: Optional[int] = None
    ) -> Dict[str, Any]:
        """Validate an integer with an optional inclusive range."""
        result = {
            'valid': True,
            'value': None,
            'errors': []
        }

        if isinstance(value, bool):
            result['valid'] = False
            result['errors'].append("Expected an integer, got a boolean")
            return result

        try:
            number = int(value)
        except (ValueError, TypeError) as e:
            result['valid'] = False
            result['errors'].append(f"Invalid integer format: {e}")
            return result

        if min_value is not None and number < min_value:
            result['valid'] = False
            result['errors'].append(f"Value must be at least {min_value}")

        if max_value is not None and number > max_value:
            result['valid'] = False
            result['errors'].append(f"Value must be no more than {max_value}")

        if result['valid']:
            result['value'] = number
        return result

    @classmethod
    def validate_rational(
        cls,
        value: Union[str, int, Fraction],
        min_value: Optional[Fraction] = None,
        max_value: Optional[Fraction] = None
    ) -> Dict[str, Any]:
        """Validate an exact rational written as 'a/b' (floats are refused)."""
        result = {
            'valid': True,
            'value': None,
            'errors': []
        }

        if isinstance(value, float):
            result['valid'] = False
            result['errors'].append("Rationals must be given as 'num/den', not floats")
            return result

        if isinstance(value, str) and not cls.RATIONAL_PATTERN.match(value):
            result['valid'] = False
            result['errors'].append(f"Invalid rational '{value}', expected 'num/den'")
            return result

        try:
            number = Fraction(value.replace(' ', '') if isinstance(value, str) else value)
        except (ValueError, TypeError, ZeroDivisionError) as e:
            result['valid'] = False
            result['errors'].append(f"Invalid rational: {e}")
            return result

        if min_value is not None and number < min_value:
            result['valid'] = False
            result['errors'].append(f"Value must be at least {min_value}")
        if max_value is not None and number > max_value:
            result['valid'] = False
            result['errors'].append(f"Value must be no more than {max_value}")

        if result['valid']:
            result['value'] = number
        return result

    @classmethod
    def validate_prime(cls, value: Union[str, int]) -> Dict[str, Any]:
        """Validate a field size: a prime number."""
        result = cls.validate_integer(value, min_value=2)
        if result['valid'] and not galois.is_prime(result['value']):
            result['valid'] = False
            result['errors'].append(f"{result['value']} is not prime")
            result['value'] = None
        return result

    @classmethod
    def validate_choice(cls, value: str, choices: List[str]) -> Dict[str, Any]:
        """Validate that a value is in a list of allowed choices."""
        result = {
            'valid': True,
            'value': value,
            'errors': []
        }
        if value not in choices:
            result['valid'] = False
            result['errors'].append(f"Value must be one of: {', '.join(choices)}")
        return result

    @classmethod
    def validate_scheme_id(cls, value: str) -> Dict[str, Any]:
        """Syntactic check of a scheme id; the registry resolves it."""
        result = {
            'valid': True,
            'value': value,
            'errors': []
        }
        if not isinstance(value, str) or not value:
            result['valid'] = False
            result['errors'].append("Scheme id must be a non-empty string")
            return result

        base = value[len('compose:'):] if value.startswith('compose:') else value
        if not cls.SCHEME_PATTERN.match(base):
            result['valid'] = False
            result['errors'].append(f"Malformed scheme id '{value}'")
        return result


class ValidationMixin:
    """
    Mixin for commands and configs to validate several parameters at once.

    Example:
        rules = {
            'N': {'type': 'integer', 'min_value': 1, 'required': True},
            'q': {'type': 'prime'},
            'mu': {'type': 'rational', 'min_value': 0, 'max_value': 1},
        }
    """

    def validate_params(
        self,
        params: Dict[str, Any],
        validation_rules: Dict[str, Dict[str, Any]]
    ) -> Dict[str, Any]:
        """Validate every parameter and return the converted values."""
        result = {
            'valid': True,
            'errors': {},
            'validated_data': {}
        }

        for param_name, rules in validation_rules.items():
            param_value = params.get(param_name)

            if rules.get('required', False) and param_value is None:
                result['valid'] = False
                result['errors'][param_name] = [f"{param_name} is required"]
                continue

            if param_value is None:
                continue

            param_result = self._validate_single_param(param_value, rules)
            if not param_result['valid']:
                result['valid'] = False
                result['errors'][param_name] = param_result['errors']
            else:
                result['validated_data'][param_name] = param_result.get('value', param_value)

        return result

    def _validate_single_param(self, value: Any, rules: Dict[str, Any]) -> Dict[str, Any]:
        validation_type = rules.get('type', 'integer')

        if validation_type == 'integer':
            return InputValidator.validate_integer(
                value,
                min_value=rules.get('min_value'),
                max_value=rules.get('max_value')
            )
        elif validation_type == 'rational':
            return InputValidator.validate_rational(
                value,
                min_value=rules.get('min_value'),
                max_value=rules.get('max_value')
            )
        elif validation_type == 'prime':
            return InputValidator.validate_prime(value)
        elif validation_type == 'choice':
            return InputValidator.validate_choice(value, choices=rules.get('choices', []))
        elif validation_type == 'scheme':
            return InputValidator.validate_scheme_id(value)
        elif validation_type == 'string':
            return {'valid': isinstance(value, str), 'value': value,
                    'errors': [] if isinstance(value, str) else ["Expected a string"]}
        else:
            return {
                'valid': False,
                'errors': [f"Unknown validation type: {validation_type}"]
            }

    def validated_or_raise(
        self,
        params: Dict[str, Any],
        validation_rules: Dict[str, Dict[str, Any]]
    ) -> Dict[str, Any]:
        """
        Validate and return converted values.

        Raises:
            ValidationError: If any parameter is invalid
        """
        result = self.validate_params(params, validation_rules)
        if not result['valid']:
            summary = '; '.join(f"{name}: {', '.join(errors)}" for name, errors in result['errors'].items())
            raise ValidationError(
                f"Invalid parameters: {summary}",
                code='INVALID_PARAMETER',
                details={'errors': result['errors']}
            )
        return result['validated_data']
