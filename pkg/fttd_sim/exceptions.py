"""Domain specific exception hierarchy for the fttd_sim package."""

from __future__ import annotations

from collections.abc import Sequence
from typing import Any


class FttdSimError(Exception):
    """Base exception for all library errors."""


class ConfigurationError(FttdSimError):
    """Raised when an experiment configuration cannot be resolved or validated."""


class InvalidArgumentError(FttdSimError, ValueError):
    """Raised when an operation receives an argument outside its domain."""


class DomainError(FttdSimError, ValueError):
    """Raised when an inverse trigonometric argument leaves [-1, 1]."""

    def __init__(self, message: str, *, value: float) -> None:
        super().__init__(message)
        self.value = value


class ShapeMismatchError(FttdSimError, ValueError):
    """Raised when matrix operands do not have compatible shapes."""

    def __init__(
        self,
        message: str,
        *,
        expected: Any = None,
        actual: Any = None,
    ) -> None:
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class MissingFieldError(FttdSimError):
    """Raised when an architecture spec lacks a field its kind requires."""

    def __init__(self, message: str, *, kind: str, field: str) -> None:
        super().__init__(message)
        self.kind = kind
        self.field = field


class DegenerateSolutionError(FttdSimError):
    """Raised when a precoder cannot be normalized (zero composite norm)."""

    def __init__(self, message: str, *, carriers: Sequence[int] = ()) -> None:
        super().__init__(message)
        self.carriers = list(carriers)


class NumericalError(FttdSimError):
    """Raised when an accumulated matrix drifts too far from Hermitian."""

    def __init__(self, message: str, *, deviation: float) -> None:
        super().__init__(message)
        self.deviation = deviation
