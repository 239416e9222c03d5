"""Compatibility shims for older Python versions."""

import sys

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:
    from enum import Enum

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum (Python 3.11)."""

        def __new__(cls, *values):
            value = str(*values)
            member = str.__new__(cls, value)
            member._value_ = value
            return member

        @staticmethod
        def _generate_next_value_(name, start, count, last_values):
            return name.lower()

        __str__ = str.__str__
        __format__ = str.__format__

__all__ = ["StrEnum"]
