"""Exception types shared across the package."""
from __future__ import annotations


class TanconnError(Exception):
    """Base class for every error raised by this package."""


class SlotError(TanconnError, ValueError):
    pass


class TowerMismatch(TanconnError, ValueError):
    """Two towers fed to a fibrewise sum disagree on a shared component."""


class DimensionMismatch(TanconnError, ValueError):
    pass


class DomainError(TanconnError, ArithmeticError):
    """Division by ~0 or sqrt of a negative base value during evaluation."""

    def __init__(self, message: str, node: object = None):
        super().__init__(message)
        self.node = node


class ParseError(TanconnError):
    def __init__(self, message: str, line: int, column: int, expected: tuple[str, ...] = ()):
        self.line = line
        self.column = column
        self.expected = tuple(expected)
        text = f"{line}:{column}: {message}"
        if expected:
            text += " (expected one of: " + ", ".join(expected) + ")"
        super().__init__(text)


class ConstraintViolation(TanconnError):
    def __init__(self, message: str, report: list[dict] | None = None):
        super().__init__(message)
        self.report = report or []


class SamplingFailed(TanconnError):
    pass


class PreconditionFailed(TanconnError):
    pass


class SolveFailed(TanconnError):
    pass


class RankDeficient(TanconnError):
    pass


class CompatibilityViolation(TanconnError):
    pass


class SectionRetractionMismatch(TanconnError):
    pass


class NotAffine(TanconnError):
    pass


class NotTorsionFree(TanconnError):
    pass


class NotAVectorField(TanconnError):
    pass


class NotASection(TanconnError):
    pass


class NonFiniteState(TanconnError):
    def __init__(self, message: str, node: int = -1):
        super().__init__(message)
        self.node = node


class BasePointMismatch(TanconnError):
    pass


class LoopNotClosed(TanconnError):
    pass
