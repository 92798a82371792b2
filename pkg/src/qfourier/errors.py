"""Exception hierarchy shared by all modules.

The CLI maps each class to a distinct exit code, so library code should
raise the most specific one that applies.
"""

from __future__ import annotations


class QFourierError(Exception):
    """Base class for all library errors."""


class QDomainError(QFourierError, ValueError):
    """An argument lies outside the domain where the quantity is defined."""


class ConvergenceError(QFourierError, ArithmeticError):
    """A series, product, quadrature or iteration did not converge.

    Parameters
    ----------
    message : str
        Human readable description.
    last_term : float, optional
        Magnitude of the last term or correction seen before giving up.
    """

    def __init__(self, message: str, last_term: float | None = None):
        super().__init__(message)
        self.last_term = last_term


class StructuralError(QFourierError, RuntimeError):
    """A structural expectation failed (missing sign change, missing cache, ...)."""
