"""Exception types raised by the toolkit."""


class StratWaveError(Exception):
    """Base class for all toolkit errors."""


class InvalidParameterError(StratWaveError, ValueError):
    pass


class DomainError(StratWaveError, ValueError):
    """Profile queried outside its interval of definition."""


class StagnationError(StratWaveError):
    """h_p <= 0 somewhere, i.e. u >= c in the fluid."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where


class NoLaminarFlowError(StratWaveError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DivergenceError(StratWaveError):
    def __init__(self, message, history=None, amplitude=None):
        super().__init__(message)
        self.history = list(history or [])
        self.amplitude = amplitude


class BifurcationNotFoundError(StratWaveError):
    pass


class PerronFailure(StratWaveError):
    """Principal eigenpair is complex or its eigenvector changes sign."""


class MisuseError(StratWaveError):
    pass


class InvalidTestFunctionError(StratWaveError, ValueError):
    pass


class SingularSystemError(StratWaveError):
    pass
