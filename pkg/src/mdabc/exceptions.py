"""Exception hierarchy shared across the package."""


class MDABCError(Exception):
    """Base class for all errors raised by mdabc."""


class GridTooNarrow(MDABCError, ValueError):
    """The integration grid does not cover the kernel mass of the data."""


class DegenerateSample(MDABCError, ValueError):
    """A sample with zero spread was given where spread is required."""


class LengthMismatch(MDABCError, ValueError):
    pass


class InvalidParameter(MDABCError, ValueError):
    """A parameter vector lies outside the model's support."""


class QOutOfRange(MDABCError, ValueError):
    pass


class DimensionMismatch(MDABCError, ValueError):
    pass


class NoAcceptances(MDABCError, RuntimeError):
    """Rejection ABC kept no draws at the requested tolerance."""


class DegenerateCloud(MDABCError, RuntimeError):
    """Every initial particle has infinite distance."""


class EmptyCloud(MDABCError, ValueError):
    pass


class IoFailure(MDABCError, OSError):
    pass


class ConfigError(MDABCError, ValueError):
    """Experiment configuration failed schema or semantic validation."""


class OptimizerFailure(UserWarning):
    """Warning emitted when no optimizer restart reports convergence."""
