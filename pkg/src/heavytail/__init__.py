"""Heavy-tailed stationary infinitely divisible process simulation toolkit.

Simulation and Monte Carlo verification tools for partial sums of
stationary symmetric ID processes driven by null-recurrent Markov
chains: inverse stable subordinators, renewal-type chains and their
occupation statistics, LePage series machinery, the self-similar limit
family, and fractional-moment inequality calibration.
"""

from .errors import (
    ConfigError,
    EfficiencyError,
    HeavytailError,
    ParameterError,
    PrecisionError,
    SeriesConvergenceError,
    UnsupportedModelError,
)
from .paths import SamplePath, validate_grid

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "EfficiencyError",
    "HeavytailError",
    "ParameterError",
    "PrecisionError",
    "SamplePath",
    "SeriesConvergenceError",
    "UnsupportedModelError",
    "validate_grid",
    "__version__",
]
