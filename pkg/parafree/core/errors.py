"""Exception types shared by the numerical core."""


class StencilError(ValueError):
    """A difference stencil leaves the grid or would not be monotone."""


class RegionError(ValueError):
    """A cylinder, time window or sampling image does not fit inside the grid."""


class PreconditionError(ValueError):
    """An estimator was called outside its mathematical hypotheses."""


class SolverError(RuntimeError):
    """An iteration cap was exceeded."""

    def __init__(self, message: str, worst_residual: float = float("nan")):
        super().__init__(message)
        self.worst_residual = worst_residual
