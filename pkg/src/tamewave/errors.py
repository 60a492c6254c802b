"""Exception taxonomy shared by all modules.

Each class corresponds to one machine-readable error category; the CLI maps
them to distinct exit codes.
"""


class TamewaveError(Exception):
    """Base class for all library errors."""


class ConfigurationError(TamewaveError, ValueError):
    """Invalid parameters, malformed configs, bad grids or schedules."""


class DataError(TamewaveError, ValueError):
    """Invalid field data: NaN/Inf entries, overflow, broken invariants."""


class DomainError(TamewaveError, ValueError):
    """Mathematical preconditions violated: lower bounds, hyperbolicity,
    amplitude validity, trust-region exits."""


class SolverError(TamewaveError, RuntimeError):
    """Linear solver failures: CFL violations, conditioning, residual checks."""


class ConvergenceError(TamewaveError, RuntimeError):
    """Iteration did not converge (divergence or iteration budget exhausted)."""


class ScheduleError(TamewaveError, OverflowError):
    """Smoothing-schedule bookkeeping overflowed (theta grew too large)."""
