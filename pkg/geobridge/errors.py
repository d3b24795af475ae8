"""
Exception hierarchy for geobridge.

Every error raised on purpose by the package derives from :class:`GeoBridgeError`.
The concrete classes also derive from the closest built-in exception so callers
that only know about ``ValueError`` or ``ArithmeticError`` keep working.

The command line maps these onto exit codes:

- :class:`ConfigError` -> 2
- :class:`FormatError` (and ``OSError``) -> 3
- :class:`NumericalError` and subclasses -> 4
"""
from typing import Optional


__all__ = ["GeoBridgeError",
           "ConfigError",
           "TimeRangeError",
           "SegmentIndexError",
           "StateError",
           "AlignmentError",
           "InputError",
           "NumericalError",
           "DivergenceError",
           "SingularGradientError",
           "FormatError"]


class GeoBridgeError(Exception):
    """Base class of all errors raised by geobridge."""


class ConfigError(GeoBridgeError, ValueError):
    """Invalid configuration key or value."""


class TimeRangeError(GeoBridgeError, ValueError):
    """A time argument lies outside its admissible range or order."""


class SegmentIndexError(GeoBridgeError, IndexError):
    """Segment index outside ``[0, N-1]``."""


class StateError(GeoBridgeError, ValueError):
    """Malformed geometric state, rigid motion or coordinate array."""


class AlignmentError(StateError):
    """Two states cannot be compared atom by atom."""


class InputError(GeoBridgeError, ValueError):
    """Invalid grid or density handed to a numerical oracle."""


class NumericalError(GeoBridgeError, ArithmeticError):
    """A loss, gradient or state stopped being finite."""


class DivergenceError(NumericalError):
    """
    Integration produced a non-finite state.

    :ivar step: Index of the integration step that produced the non-finite state,
        or None when unknown.
    :type step: Optional[int]
    """
    def __init__(self, message: str, step: Optional[int] = None):
        super().__init__(message)
        self.step = step


class SingularGradientError(NumericalError):
    """Two atoms coincide, so the pair potential has no gradient."""


class FormatError(GeoBridgeError, ValueError):
    """A binary file does not follow its declared layout."""
