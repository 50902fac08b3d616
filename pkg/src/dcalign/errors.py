"""Exception hierarchy shared by all modules.

The CLI maps the three families onto exit codes: validation -> 1,
numerical -> 2, I/O -> 3.
"""


class DCError(Exception):
    """Base class for every error raised by dcalign."""


class ValidationError(DCError, ValueError):
    """Inputs violate a documented precondition."""


class DimensionError(ValidationError):
    """Matrix shapes do not conform."""


class FitError(ValidationError):
    """Regression inputs are degenerate."""


class NumericalError(DCError, ArithmeticError):
    """A numerical routine failed or hit a rank threshold."""


class RankError(NumericalError):
    pass


class SingularError(NumericalError):
    pass


class SkippedError(DCError):
    """A benchmark grid point could not be run (e.g. out of memory)."""


class IoError(DCError, OSError):
    """Reading or writing artifacts failed."""
