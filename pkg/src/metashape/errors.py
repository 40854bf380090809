"""Exception types raised across the package."""


class MetashapeError(Exception):
    """Base class for all package errors."""


class DomainError(MetashapeError, ValueError):
    """A parameter lies outside its admissible domain."""


class DimMismatch(MetashapeError, ValueError):
    pass


class DuplicateInputMode(MetashapeError, ValueError):
    pass


class InconsistentInputs(MetashapeError, ValueError):
    pass


class PatternMismatch(MetashapeError, ValueError):
    """A detection pattern does not fit the selected output component."""


class ZeroNorm(MetashapeError, ArithmeticError):
    """The conditioned amplitude vanishes, so the event cannot occur."""


class QuadratureNotConverged(MetashapeError, ArithmeticError):
    pass


class SizeLimit(MetashapeError, ValueError):
    pass


class ConfigError(MetashapeError, ValueError):
    """Invalid scenario configuration; ``where`` names the offending field."""

    def __init__(self, message, where=None):
        self.where = where
        super().__init__(f"{where}: {message}" if where else message)
