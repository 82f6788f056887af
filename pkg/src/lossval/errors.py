"""Exception types shared across the package."""


class LossValError(Exception):
    """Base class for all package errors."""


class ShapeError(LossValError, ValueError):
    """Array dimensions do not match what an operation requires."""


class NumericError(LossValError, ArithmeticError):
    """A computation produced or received non-finite values."""


class ConfigError(LossValError, ValueError):
    """Invalid configuration value or combination."""


class ParseError(LossValError, ValueError):
    """Malformed input file; message carries row/column location."""
