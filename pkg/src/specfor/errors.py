"""Exception types raised across the package.

Missing files raise the builtin FileNotFoundError and write failures
surface as OSError; everything else gets a named type below so callers
can distinguish failure modes without parsing messages.
"""


class SpecforError(Exception):
    """Base class for all package-specific errors."""


class UnsupportedFormatError(SpecforError):
    """File is not one of the formats this package reads."""


class CorruptImageError(SpecforError):
    """File matched a known format but could not be decoded."""


class NonFiniteInputError(SpecforError):
    """Numeric input contained NaN or infinity."""


class InputTooLargeError(SpecforError):
    """Input exceeds a hard size guard."""


class DegenerateProfileError(SpecforError):
    """Radial profile has too few usable bins for a log-log fit."""


class EmptyInputError(SpecforError):
    """An operation that needs at least one element got none."""


class BadRatiosError(SpecforError):
    """Split ratios are invalid or do not sum to one."""


class MalformedRowError(SpecforError):
    """A manifest row is missing fields or holds out-of-range values."""


class MalformedModelError(SpecforError):
    """A model file is missing fields or holds unparseable values."""


class SchemaMismatchError(SpecforError):
    """Feature vector schema does not match what the consumer expects."""


class TooFewSamplesError(SpecforError):
    """Not enough samples to fit statistics."""


class EmptySplitError(SpecforError):
    """Training requires non-empty train and validation splits."""


class LengthMismatchError(SpecforError):
    """Parallel arrays have different lengths."""


class OneClassOnlyError(SpecforError):
    """Ranking metric needs both classes present."""


class NoPositivesError(SpecforError):
    """Average precision needs at least one positive label."""
