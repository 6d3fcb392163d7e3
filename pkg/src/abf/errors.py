"""Exception hierarchy shared across the package."""


class AbfError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(AbfError, ValueError):
    """Vector/sequence dimensions do not match the operation's contract."""


class DegenerateSampleError(AbfError, ValueError):
    """A sample set has no dispersion (e.g. all points identical)."""


class DegenerateInputError(AbfError, ValueError):
    """A density or data object is degenerate for the requested operation."""


class DegenerateRegressionError(AbfError, ValueError):
    """A regression summary cannot be formed (zero-variance regressor)."""


class InsufficientDataError(AbfError, ValueError):
    """The series is too short for the requested statistic."""


class EmptyPosteriorError(AbfError, RuntimeError):
    """No parameter draws survived selection; enlarge epsilon or N."""


class ExplosiveIntensityError(AbfError, ValueError):
    """Self-exciting intensity recursion is nonstationary (beta + gamma >= 1)."""


class InvalidAuxParameterError(AbfError, ValueError):
    """Auxiliary-model parameters violate positivity/stationarity constraints."""


class NumericalFailureError(AbfError, RuntimeError):
    """A numeric routine produced non-finite output."""


class OptimizationFailureError(AbfError, RuntimeError):
    """All optimizer starts failed; carries the best incumbent found."""

    def __init__(self, message, incumbent=None):
        super().__init__(message)
        self.incumbent = incumbent


class DegeneratePosteriorError(AbfError, RuntimeError):
    """Every grid cell's posterior weight underflowed."""


class ParticleDegeneracyError(AbfError, RuntimeError):
    """All particle weights vanished at some filtering step."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class TuningFailureError(AbfError, RuntimeError):
    """MCMC proposal adaptation could not reach a workable acceptance rate."""


class TableConstructionError(AbfError, RuntimeError):
    """A reference-table row kept failing after the retry budget."""


class DataError(AbfError, ValueError):
    """Input data file violates the expected format or value constraints."""


class ConfigError(AbfError, ValueError):
    """Experiment configuration is invalid."""
