"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ValidationError -> 2,
NumericalError -> 3, InternalError -> 4.
"""


class QnngeomError(Exception):
    """Base class for all package errors."""


class ValidationError(QnngeomError, ValueError):
    """Bad user input: out-of-range parameter, malformed spec string, ..."""


class NumericalError(QnngeomError, ArithmeticError):
    """A computation cannot proceed: degenerate ensemble, kappa ~ 1, ..."""


class InternalError(QnngeomError, RuntimeError):
    """An internal invariant was violated (norm drift, failed reconstruction)."""
