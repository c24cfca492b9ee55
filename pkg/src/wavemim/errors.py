"""Exception types shared across the library.

Everything derives from :class:`WavemimError` (itself a ``ValueError``) so
callers can catch the whole family with one clause while tests can pin the
specific failure kind.
"""


class WavemimError(ValueError):
    """Base class for all library errors."""


class DimensionError(WavemimError):
    """Array dimensions violate a precondition (parity, divisibility, shape)."""


class InputError(WavemimError):
    """Input values are invalid (non-finite entries, wrong rank)."""


class StructureError(WavemimError):
    """A composite value (pyramid, container, checkpoint) is internally inconsistent."""


class ConfigError(WavemimError):
    """A configuration value or combination of values is invalid."""


class DegenerateMaskError(WavemimError):
    """Requested mask would be empty or full."""


class DegenerateLossError(WavemimError):
    """Loss requested over zero masked cells."""


class GradientError(WavemimError):
    """Gradient evaluation failed (non-finite loss)."""


class FormatError(WavemimError):
    """A serialized file does not match its declared format."""
