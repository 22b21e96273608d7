"""Exception types shared across the package."""


class GainKFError(Exception):
    """Base class for all gainkf errors."""


class SimulationDivergedError(GainKFError):
    """A simulated state became non-finite.

    Carries ``index``, the first time step (1-based) at which a
    non-finite value appeared.
    """

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"simulation produced non-finite state at t={index}")


class FilterDivergedError(GainKFError):
    """A filter produced a non-finite estimate or an unusable covariance."""


class IllConditionedInnovationError(FilterDivergedError):
    """The innovation covariance could not be factorized/inverted."""


class DegenerateWeightsError(GainKFError):
    """All particle weights underflowed to zero.

    ``reset_to_uniform`` tells the caller whether a uniform-weight
    recovery is considered safe at the point of failure.
    """

    def __init__(self, message: str = "all particle weights underflowed", reset_to_uniform: bool = True):
        self.reset_to_uniform = reset_to_uniform
        super().__init__(message)


class ShapeError(GainKFError, ValueError):
    """An array argument had an incompatible shape."""


class ConfigError(GainKFError, ValueError):
    """An experiment configuration failed validation."""


class MissingArtifactError(GainKFError, FileNotFoundError):
    """A referenced dataset/checkpoint/report file does not exist."""
