"""Exception hierarchy shared by all busyvar modules."""

from __future__ import annotations


class BusyVarError(Exception):
    """Base class for every error raised by busyvar."""


class NumericError(BusyVarError):
    """A numerical routine could not deliver the requested accuracy."""


class QuadratureError(NumericError):
    """Adaptive quadrature exhausted its evaluation budget.

    The best available estimate is attached as ``result``.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class IntegrandError(NumericError):
    """The integrand returned NaN or an infinite value."""


class SeriesError(NumericError):
    """A series did not converge within ``max_terms``; ``result`` holds the partial sum."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class LoadRangeError(NumericError):
    """Traffic intensity beyond the overflow guard."""


class InfiniteMomentError(BusyVarError):
    """A quantity needs a moment that the service model does not have."""


class ParseError(BusyVarError, ValueError):
    """Malformed distribution spec; ``position`` is the 0-based offset of the problem."""

    def __init__(self, message, text="", position=0):
        self.text = text
        self.position = position
        super().__init__(f"{message} (at position {position} in {text!r})")


class SampleSizeError(BusyVarError, ValueError):
    """Requested sample vector exceeds the memory budget."""
