"""Exception types shared across the package."""


class LevyCoupleError(Exception):
    """Base class for all package errors."""


class FeasibilityError(LevyCoupleError):
    """One of the standing assumptions on the noise or drift fails.

    ``assumption`` holds the number of the failing assumption (3, 4 or 5), or
    ``None`` when a selection rule (not an assumption) cannot be met.
    """

    def __init__(self, message, assumption=None):
        super().__init__(message)
        self.assumption = assumption


class DomainError(LevyCoupleError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(LevyCoupleError, ValueError):
    """A configuration value is invalid or unusable for simulation."""
