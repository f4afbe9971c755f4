"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class SemidiagError(Exception):
    """Base class for all package errors."""


class DomainError(SemidiagError, ValueError):
    """An argument lies outside the domain of a function."""


class DataError(SemidiagError, ValueError):
    """Input data violates a structural or content requirement."""


class FitError(SemidiagError, RuntimeError):
    """A model fit failed to converge or produced an unusable solution."""

    def __init__(self, message: str, trace: list | None = None):
        super().__init__(message)
        self.trace = trace or []


class SeparationError(FitError):
    """Perfect or quasi-complete separation in a binary regression."""


class RankDeficientError(FitError):
    """Design matrix does not have full column rank."""


class SeriesError(SemidiagError, ArithmeticError):
    """A series evaluation exhausted its term budget before converging.

    ``state`` carries the diagnostic snapshot (parameters, window bounds,
    last term and running sum) at the moment evaluation gave up.
    """

    def __init__(self, message: str, state: dict | None = None):
        super().__init__(message)
        self.state = state or {}
