"""服务层导出"""

from .fitting import fit_loglog
from .marginal import GaussianMarginal, stationary_variance
from .montecarlo import MonteCarloRunner, make_generator, moment_row, power_warnings
from .testfunctions import TestFunction, derivative_family

__all__ = [
    "fit_loglog",
    "GaussianMarginal",
    "stationary_variance",
    "MonteCarloRunner",
    "make_generator",
    "moment_row",
    "power_warnings",
    "TestFunction",
    "derivative_family",
]
