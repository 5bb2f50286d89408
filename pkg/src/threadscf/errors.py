"""Exception hierarchy.

``ConfigError`` subclasses map to CLI exit status 2, ``NumericalError``
subclasses to exit status 3.
"""


class ThreadSCFError(Exception):
    pass


class ConfigError(ThreadSCFError, ValueError):
    pass


class GridError(ConfigError):
    """Invalid grid dimensions, or fields on different grids."""


class NumericalError(ThreadSCFError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    pass


class ZeroPartitionError(NumericalError):
    pass


class TruncationError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class BoundaryError(NumericalError):
    """A wavepacket reached a non-periodic boundary."""
