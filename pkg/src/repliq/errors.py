"""Exception hierarchy for repliq."""

from typing import Optional


class RepliqError(Exception):
    """Base class for all repliq errors."""
    pass


class InputValidationError(RepliqError, ValueError):
    """Raised when input data violates a type invariant."""
    
    def __init__(
        self,
        message: str,
        feature_id: Optional[str] = None,
        row: Optional[int] = None,
    ):
        self.feature_id = feature_id
        self.row = row
        location = []
        if row is not None:
            location.append(f"row {row}")
        if feature_id is not None:
            location.append(f"feature '{feature_id}'")
        if location:
            message = f"{', '.join(location)}: {message}"
        super().__init__(message)


class NotFollowedUpError(InputValidationError):
    """Raised when a directed pair is requested for a feature without follow-up p-values."""
    pass


class EmptySelectionError(InputValidationError):
    """Raised when the analysis is asked to run on an empty follow-up set."""
    pass


class DomainError(RepliqError, ValueError):
    """Raised when a numeric argument lies outside its mathematical domain."""
    pass


class NumericalError(RepliqError, ArithmeticError):
    """Raised when a root search fails to converge."""
    pass


class ConfigurationError(RepliqError):
    """Raised for inconsistent or unsupported analysis configurations."""
    pass


class UnknownTruthError(RepliqError, KeyError):
    """Raised when a claimed feature has no ground-truth configuration."""
    
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown truth"
