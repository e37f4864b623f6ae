"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain where an operation is defined."""


class MomentFormulaError(DomainError):
    """Closed-form Hawkes moments are singular (alpha == beta)."""


class SimulationError(RuntimeError):
    """A path produced a non-finite state."""

    def __init__(self, message, time=None, component=None):
        super().__init__(message)
        self.time = time
        self.component = component


class ExtinctBeforeWindow(DomainError):
    """Every value in the fitting window sits at the positivity floor."""


class ConfigError(ValueError):
    """Invalid run configuration; carries the offending key path and line."""

    def __init__(self, message, key=None, line=None):
        where = key or "<config>"
        if line is not None:
            where = f"{where} (line {line})"
        super().__init__(f"{where}: {message}")
        self.key = key
        self.line = line
