"""Exception types shared across the solver."""


class ValidationError(ValueError):
    """Invalid input data (bad mesh parameters, non-finite fields, h <= 0, ...)."""


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class SingularSystemError(RuntimeError):
    """A linear system is singular or too ill-conditioned to solve reliably."""


class FixedPointError(RuntimeError):
    """Implicit-midpoint fixed-point iteration failed to converge."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class BlowUpError(RuntimeError):
    """Non-finite values appeared during time stepping."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ModeAnalysisError(RuntimeError):
    """A Fourier mode pair does not span an invariant plane of the linearized operator."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class SimulationAbort(RuntimeError):
    """Time stepping aborted; the partial time series is retained on the exception."""

    def __init__(self, message, series=None, step=None):
        super().__init__(message)
        self.series = series if series is not None else []
        self.step = step
