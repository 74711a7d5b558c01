"""Exception hierarchy shared by every qclab module.

The CLI maps these onto process exit codes: user-facing input problems
(:class:`ValidationError` and subclasses) exit with 2, numerical failures
(:class:`NumericalError` and subclasses) exit with 3.
"""


class QclabError(Exception):
    """Base class for all library errors."""


class ValidationError(QclabError, ValueError):
    """Input violates a documented precondition."""


class CapacityError(ValidationError):
    """Problem size exceeds a configured limit."""


class GeometryError(ValidationError):
    """Billiard geometry cannot be discretized or cropped as requested."""


class ResolutionError(ValidationError):
    """Grid too coarse for the requested number of levels."""

    def __init__(self, message, required_n_grid=None):
        super().__init__(message)
        self.required_n_grid = required_n_grid


class NumericalError(QclabError, RuntimeError):
    """A numerical procedure failed."""


class IterationLimitError(NumericalError):
    """Iterative solver hit its iteration cap before converging."""

    def __init__(self, message, best_residual=float("nan")):
        super().__init__(message)
        self.best_residual = best_residual


class ConsistencyError(NumericalError):
    """Internal symmetry or invariant check failed."""


class NoCrossingError(NumericalError):
    """A curve expected to change sign never does."""

    def __init__(self, message, curve=None):
        super().__init__(message)
        self.curve = curve


class TrainingDivergedError(NumericalError):
    """Loss or gradient became non-finite during training."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history
