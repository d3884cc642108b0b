"""Exception types shared across the toolkit.

The CLI maps these onto process exit codes (see ``gradvar.cli``).
"""


class GradvarError(Exception):
    """Base class for toolkit errors."""


class InvalidArgument(GradvarError, ValueError):
    """An argument violates an operation's precondition."""


class CapacityExceeded(GradvarError):
    """Exhaustive operation requested above its hard size cap."""


class InsufficientData(GradvarError):
    """Not enough usable data points to produce a result."""


class DegenerateReference(GradvarError, ZeroDivisionError):
    """Relative residual requested against a zero reference energy."""


class StrategyInapplicable(GradvarError):
    """A reformulation strategy does not apply to the given instance."""


class IntegrityError(GradvarError):
    """An internal consistency check failed."""


class IOFailure(GradvarError, OSError):
    """Reading or writing an artifact failed."""
