"""Shared exception types.

Validation problems raise subclasses of ValueError so plain callers can catch
broadly; the CLI maps the categories to distinct exit codes.
"""


class DomainError(ValueError):
    """A time, dimension or mode argument lies outside the valid domain."""


class ConfigError(ValueError):
    """Inconsistent or unknown configuration (solver windows, CLI keys, ...)."""


class GridMismatchError(ValueError):
    """Partition times cannot be snapped onto a path grid."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its contract."""


class FlowIterationError(NumericalError):
    """Picard iteration did not contract to tolerance.

    Carries the last iterate so callers can inspect how far the solve got.
    """

    def __init__(self, message, last_iterate=None, sup_change=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.sup_change = sup_change


class NonDifferentiableError(NumericalError):
    """A difference-quotient ladder did not converge.

    ``which`` names the offending derivative ('d_gamma', 'd_horizontal' or
    'd_space[i]'), ``report`` is the full ladder report.
    """

    def __init__(self, which, report=None):
        super().__init__(f"derivative ladder did not converge: {which} "
                         f"(verdict={getattr(report, 'verdict', 'unknown')})")
        self.which = which
        self.report = report


class IllConditionedError(NumericalError):
    """A direction system is numerically singular."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond
