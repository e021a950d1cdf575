"""
Utilities module for the calibration toolkit.
Contains configuration, logging, and error types.
"""

from .config import Config
from .version import __version__
from .logging_config import setup_logging, get_logger
from .errors import (
    CalibrationError,
    ConfigError,
    ConvergenceError,
    DegenerateDistortionError,
    DegenerateNormalizationError,
    InvalidArgumentError,
    ModelStateError,
    NumericalFailureError,
)

__all__ = [
    "Config",
    "__version__",
    "setup_logging",
    "get_logger",
    "CalibrationError",
    "ConfigError",
    "ConvergenceError",
    "DegenerateDistortionError",
    "DegenerateNormalizationError",
    "InvalidArgumentError",
    "ModelStateError",
    "NumericalFailureError",
]
