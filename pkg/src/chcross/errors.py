"""Exception hierarchy shared by all modules."""


class ArgumentError(ValueError):
    """An argument violates a documented precondition."""


class DataError(ValueError):
    """Input data is non-finite or otherwise unusable."""


class SolverError(RuntimeError):
    """A linear solve failed or missed its residual target."""

    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class StepError(SolverError):
    """A time step could not be completed."""

    def __init__(self, message, step_index, residual=float("nan")):
        super().__init__(message, residual)
        self.step_index = step_index
