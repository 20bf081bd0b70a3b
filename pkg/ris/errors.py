class RisError(Exception):
    """Base class for every error raised by the ris package."""


class DomainError(RisError, ValueError):
    """An argument lies outside the domain of the operation."""


class NumericError(RisError, ArithmeticError):
    """A numerical routine could not produce a trustworthy value."""


class ConvergenceError(NumericError):
    """A series or continued fraction hit its iteration cap."""


class QuadratureError(NumericError):
    """Gauss quadrature did not settle before the node cap."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})

    def __str__(self):
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{k}={v!r}" for k, v in self.diagnostics.items())
        return f"{base} ({details})"


class GridMismatchError(RisError, ValueError):
    """Two CDF curves were evaluated on different grids."""


class ConfigError(RisError):
    """A sweep configuration could not be read or failed validation."""

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        where = []
        if key:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} [{', '.join(where)}]"
        super().__init__(message)


class SweepError(NumericError):
    """A numeric failure inside a sweep, tagged with the offending p value."""

    def __init__(self, message, p_db=None):
        self.p_db = p_db
        if p_db is not None:
            message = f"p = {p_db:g} dB: {message}"
        super().__init__(message)
