"""Exception hierarchy for the Hecke multiplicity pipeline."""

from typing import Any, Dict, Optional


class HeckeError(Exception):
    """Base class for every error raised by the pipeline."""

    exit_code = 1

    def __init__(self, message: str, context: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.context = context or {}


class MalformedInputError(HeckeError):
    """Raised when user input or a serialized value cannot be parsed."""

    exit_code = 2


class UnsupportedTypeError(HeckeError):
    """Raised for Cartan factors outside the supported families."""

    exit_code = 2


class GroupTooLargeError(HeckeError):
    """Raised when a Weyl group exceeds the configured enumeration bound."""

    exit_code = 2


class NotMiddleElementError(HeckeError):
    """Raised when a character is not the middle element of a Lie triple.

    The witness (simple-root pairings of the offending character) is kept in
    ``context`` so the CLI can print it.
    """

    exit_code = 3


class SingularMatrixError(HeckeError):
    """Raised when an exact inversion meets a singular matrix."""

    exit_code = 4


class InvariantViolation(HeckeError):
    """Raised when a checked mathematical invariant fails."""

    exit_code = 4


class BudgetExceededError(HeckeError):
    """Raised when a run exceeds its configured time budget."""

    exit_code = 5


class FixtureError(HeckeError):
    """Raised when the fixture corpus is missing, empty or corrupt."""

    exit_code = 6
