from __future__ import annotations

from typing import Optional


class PolytopeError(Exception):
    """Base class for every error raised by the toolkit."""


class DomainError(PolytopeError, ValueError):
    """Raised when an argument lies outside the domain of a formula."""


class ConfigError(PolytopeError, ValueError):
    """Raised when an experiment configuration is invalid."""


class ResourceCapError(PolytopeError, RuntimeError):
    """Raised when a simulation would exceed the desk-scale caps."""


class NumericError(PolytopeError, ArithmeticError):
    """Raised when an iterative computation fails to converge."""

    def __init__(self, message: str, partial_sum: Optional[float] = None) -> None:
        super().__init__(message)
        self.partial_sum = partial_sum


class RootBracketError(NumericError):
    """Raised when a monotone equation shows no sign change on its bracket."""


class ClassificationError(NumericError):
    """Raised when L(d)/d neither settles nor drifts monotonically."""
