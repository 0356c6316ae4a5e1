# errors.py
"""
Exception types raised across the sticky toolkit.

Domain violations are always raised, never clamped. Every error derives
from StickyError so callers (CLI, API) can map them to exit codes / HTTP
status codes in one place.
"""


class StickyError(Exception):
    """Base class for all toolkit errors."""


class DomainError(StickyError, ValueError):
    """An argument lies outside the domain of the operation."""


class StepSizeError(DomainError):
    """The splitting integrator step is too large for the local drift."""


class ModelError(DomainError):
    """A density model or pair potential is invalid or produced non-finite values."""

    def __init__(self, message: str, state=None):
        if state is not None:
            message = f"{message} (at state {list(map(float, state))})"
        super().__init__(message)
        self.state = state


class QuadratureError(StickyError, RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message: str, error_estimate: float):
        super().__init__(f"{message} (achieved error estimate {error_estimate:.3e})")
        self.error_estimate = error_estimate


class DriftOverflowError(StickyError, FloatingPointError):
    """The drift of a distorted model overflowed along a path."""


class DegenerateMeasureError(StickyError, ZeroDivisionError):
    """A normalising integral vanished."""


class MissingNoiseError(StickyError):
    """A path without recorded driving noise was passed where noise is required."""
