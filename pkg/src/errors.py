"""Exception roots shared by every module.

Concrete errors live next to the operation that raises them and subclass one
of the two families below; the CLI maps the families to exit codes.
"""


class QuadresError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 2


class ConfigurationError(QuadresError):
    """Raised when user input or a config document is invalid."""

    exit_code = 1


class NumericalError(QuadresError):
    """Raised when a computation fails a structural or numerical check."""

    exit_code = 2


class DimensionMismatchError(ConfigurationError):
    """Raised when a vector or matrix does not match the form's dimension."""

    pass
