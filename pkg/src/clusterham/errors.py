"""Exception types shared across the package."""

from __future__ import annotations


class ClusterHamError(Exception):
    """Base class for all errors raised by clusterham."""


class DivisionByZero(ClusterHamError, ZeroDivisionError):
    """A variable carrying a negative exponent was evaluated at zero."""

    def __init__(self, message: str, site=None):
        super().__init__(message)
        self.site = site


class UnknownLabel(ClusterHamError, KeyError):
    pass


class MalformedQuiver(ClusterHamError, ValueError):
    pass


class ParseError(ClusterHamError, ValueError):
    """Text-format error; carries the offending line number when known."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class SkewViolation(ClusterHamError, ValueError):
    pass


class WindowTooSmall(ClusterHamError, ValueError):
    pass


class OrderDependent(ClusterHamError):
    pass


class MissingInitialData(ClusterHamError, KeyError):
    pass


class BudgetExceeded(ClusterHamError):
    pass


class UncoveredVariable(ClusterHamError, KeyError):
    pass


class DimensionMismatch(ClusterHamError, ValueError):
    pass


class NotCompatible(ClusterHamError, ValueError):
    pass


class OddnessViolation(ClusterHamError, ValueError):
    pass


class SkewnessViolation(ClusterHamError, ValueError):
    pass


class UnknownModel(ClusterHamError, KeyError):
    pass


class UnsupportedReduction(ClusterHamError, ValueError):
    pass


class ReductionMismatch(ClusterHamError):
    def __init__(self, message: str, diff=()):
        super().__init__(message)
        self.diff = list(diff)
