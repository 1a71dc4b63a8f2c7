"""Exception types shared across the library."""


class ToneMapError(Exception):
    """Base class for every error this library raises on purpose."""


class HdrFormatError(ToneMapError):
    """Input bytes do not form a valid HDR file."""


class TruncationError(HdrFormatError):
    """File ends before the payload its header promises."""


class UnsupportedOrientationError(HdrFormatError):
    """Resolution line uses an orientation other than ``-Y H +X W``."""


class ParameterError(ToneMapError, ValueError):
    """A user-supplied parameter violates its documented contract."""


class RangeError(ParameterError):
    """A value lies outside the interval an operation requires."""


class DimensionError(ParameterError):
    """A raster is empty or has an unusable shape."""


class ContractViolationError(ToneMapError):
    """Caller broke an API precondition (bounds, matching dimensions, degenerate regions)."""
