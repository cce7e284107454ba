"""Exception types shared across the package."""


class NldenoiseError(Exception):
    """Base class for all package errors."""


class PgmError(NldenoiseError):
    """Problem reading or writing a PGM file."""


class MalformedHeaderError(PgmError):
    pass


class TruncatedPayloadError(PgmError):
    pass


class UnsupportedFormatError(PgmError):
    pass


class DimensionMismatchError(NldenoiseError):
    pass


class ScalingOverflowError(NldenoiseError):
    """A node left the torus after the fast-summation affine scaling."""


class WindowSizeError(NldenoiseError):
    """A feature window exceeds the 3-dimension fast-transform limit."""


class DenseLimitError(NldenoiseError):
    """Dense assembly requested above the configured node limit."""


class SolverBreakdownError(NldenoiseError):
    """Non-finite values encountered inside an iterative solve."""


class ConfigError(NldenoiseError):
    pass
