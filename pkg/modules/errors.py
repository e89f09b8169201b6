"""Exception hierarchy shared by every module in the package."""

from typing import Any, Dict, Optional


class SwerveSafetyError(Exception):
    """Root of all errors raised by the library."""


class ConfigError(SwerveSafetyError):
    """A configuration document failed to parse or validate."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(SwerveSafetyError):
    """An input lies outside the domain of the requested operation."""


class DegenerateSpeedError(DomainError):
    pass


class InfeasibleLaneChangeError(DomainError):
    pass


class HeadingLimitError(DomainError):
    pass


class ClearanceUnreachableError(DomainError):
    pass


class LowSpeedSingularityError(DomainError):
    """Slip angles are undefined once the dynamic model's speed reaches zero."""


class NoFeasibleManoeuvreError(DomainError):
    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        self.diagnostics = diagnostics or {}
        super().__init__(f"{message} (diagnostics: {self.diagnostics})")


class BracketError(DomainError):
    """Bisection could not bracket a sign change."""
