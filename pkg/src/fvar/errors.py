"""Exception hierarchy shared across the package.

The command line maps these onto exit codes: usage errors exit 1, data
errors exit 2, numerical failures exit 3.
"""


class FvarError(Exception):
    """Base class for package errors."""

    exit_code = 3


class UsageError(FvarError):
    """Invalid arguments, unknown kinds, out-of-range parameters."""

    exit_code = 1


class DataError(FvarError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class DimensionError(DataError):
    """Shape or grid mismatch between operands."""


class NumericalError(FvarError):
    """Numerical failure: non-stationarity, divergence, singularity."""

    exit_code = 3
