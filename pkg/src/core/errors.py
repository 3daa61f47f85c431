"""
Exception hierarchy for the switched-system realization toolkit.

Library code raises these; only main.py turns them into console messages
and exit codes.
"""

from typing import Optional


class RealizationError(Exception):
    """Base class for every error raised by the realization engine."""


class InvalidModeError(RealizationError, ValueError):
    """A mode letter lies outside 1..D."""


class DimensionMismatchError(RealizationError, ValueError):
    """Matrix, vector or oracle dimensions do not agree."""


class OutOfDepthError(RealizationError, LookupError):
    """A word longer than the available data depth was requested."""


class ShiftInconsistencyError(OutOfDepthError):
    """Hankel columns are too shallow for the shift maps to be consistent."""


class HankelSizeError(RealizationError, ValueError):
    """Dense Hankel assembly would exceed the configured entry cap."""


class CombinatorialCapError(RealizationError, ValueError):
    """An exhaustive enumeration would exceed its configured cap."""


class HypothesisViolatedError(RealizationError):
    """A realization run failed its post-hoc Markov-parameter validation."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class NotIsomorphicError(RealizationError):
    """No isomorphism satisfies the morphism equations within tolerance."""

    def __init__(self, message: str, residual: Optional[float] = None):
        super().__init__(message)
        self.residual = residual


class SchemaError(RealizationError, ValueError):
    """An input file does not follow its documented format."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field
