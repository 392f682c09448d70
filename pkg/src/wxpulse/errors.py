"""Exception hierarchy shared by the solver, simulator and CLI."""


class WxPulseError(Exception):
    """Base class for all package errors."""


class DomainError(WxPulseError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class DegenerateFilterError(WxPulseError):
    """The central filter slice is (numerically) the zero vector."""


class OrthogonalFilterError(WxPulseError):
    """Filter and padded code are orthogonal, so the estimator is undefined."""


class DegenerateIterateError(WxPulseError):
    """An ADMM slack iterate collapsed onto a zero quadratic form."""


class ConditioningError(WxPulseError):
    """Linear solve failed because the system is ill-conditioned."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


class SolverError(WxPulseError):
    """Every restart of the design loop failed."""


class ConfigError(WxPulseError):
    """Configuration or input file failed validation."""

    def __init__(self, message, field=None, line=None, source=None):
        self.field = field
        self.line = line
        self.source = source
        super().__init__(message)

    def __str__(self):
        where = self.source or "<config>"
        if self.line is not None:
            where = f"{where}:{self.line}"
        msg = self.args[0]
        if self.field:
            msg = f"field '{self.field}': {msg}"
        return f"{where}: {msg}"
