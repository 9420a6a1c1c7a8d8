"""随机 SQG 方程正则结构数值工具包"""

from .api import ConfigError, NumericalDiagnostic, SqgError, logger
from .config import ExperimentConfig
from .main import SqgToolkit, run

__all__ = [
    "SqgToolkit",
    "ExperimentConfig",
    "run",
    "logger",
    "SqgError",
    "ConfigError",
    "NumericalDiagnostic",
]
