"""Exception types that map onto the command-line exit codes."""

from __future__ import annotations

__all__ = ["HindsightError", "ConfigError", "DataError", "QuadratureError"]


class HindsightError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(HindsightError):
    """Invalid, unknown, or inconsistent configuration input."""


class DataError(HindsightError):
    """Malformed or out-of-domain data (pairs, files, column values)."""


class QuadratureError(HindsightError):
    """Numerical integration failed to reach the requested tolerance."""

    def __init__(self, message: str, achieved_tolerance: float | None = None):
        super().__init__(message)
        self.achieved_tolerance = achieved_tolerance
