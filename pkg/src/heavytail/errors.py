"""Exception types shared across the toolkit."""


class HeavytailError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(HeavytailError, ValueError):
    """A parameter is outside its admissible range."""


class UnsupportedModelError(HeavytailError):
    """The chain model lacks a quantity (estimator, closed form) the caller needs."""


class PrecisionError(HeavytailError):
    """A numerical routine could not reach the requested accuracy.

    The achieved error, when known, is attached as ``achieved``.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class EfficiencyError(HeavytailError):
    """A rejection-type sampler fell below its acceptance-rate floor."""

    def __init__(self, message, acceptance_rate=None):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate


class SeriesConvergenceError(HeavytailError):
    """Partial sums of a lag-covariance series failed to stabilize."""


class ConfigError(HeavytailError):
    """An experiment config is missing, malformed, or violates its schema."""
