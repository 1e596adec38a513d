"""Exception hierarchy shared across the package."""


class BnnlpError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BnnlpError, ValueError):
    """Malformed or dimensionally inconsistent input."""


class InvalidStateError(BnnlpError, ValueError):
    """A parameter object violates one of its invariants."""


class ConfigError(BnnlpError, ValueError):
    """Invalid run or chain configuration."""


class DataError(BnnlpError, ValueError):
    """Problems with an input dataset (missing columns, bad dates, gaps)."""


class NumericError(BnnlpError, ArithmeticError):
    """Unrecoverable numerical failure (non-PD precision, Cholesky failure)."""
