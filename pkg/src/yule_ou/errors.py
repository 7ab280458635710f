"""Exception types shared across the package."""


class YuleOuError(Exception):
    """Base class for all package errors."""


class ParameterError(YuleOuError, ValueError):
    """A parameter is outside its mathematical domain."""


class InsufficientDataError(YuleOuError, ValueError):
    """Not enough observations to evaluate the requested quantity."""


class GridMismatchError(YuleOuError, ValueError):
    """Two paths do not share the same time grid."""


class DegenerateStatisticError(YuleOuError, ValueError):
    """A denominator of the statistic is degenerate (constant path)."""
