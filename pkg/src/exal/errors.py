"""Exception hierarchy shared across the package.

Dimension/shape mismatches in numerical kernels raise plain ``ValueError``;
these classes cover configuration and data problems that the CLI maps to
distinct exit codes.
"""


class ExalError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(ExalError):
    """Invalid configuration value, unsupported shape, or unknown label/key."""


class DataError(ExalError):
    """Dataset acquisition or parsing failure."""


class IdxFormatError(DataError):
    """Malformed IDX container."""


class IdxMagicError(IdxFormatError):
    """IDX file starts with the wrong magic number."""


class IdxTruncatedError(IdxFormatError):
    """IDX payload shorter (or longer) than its header promises."""


class IdxCountMismatchError(IdxFormatError):
    """Image count and label count disagree."""
