"""测试共享夹具"""

import logging
from fractions import Fraction

import numpy as np
import pytest

from sqg_rs.api import logger
from sqg_rs.canonical_model import CanonicalModel, build_model
from sqg_rs.config import ExperimentConfig
from sqg_rs.models.field import PeriodicField
from sqg_rs.noise import Mollifier, NoiseGrid
from sqg_rs.structure import generate

MU = 0.9


@pytest.fixture
def mu():
    return MU


@pytest.fixture
def exact_space():
    """μ=9/10、κ=1/100 的模型空间"""
    return generate(Fraction(9, 10), Fraction(1, 100), 3)


@pytest.fixture
def small_grid():
    # ε=1/2 在该网格上可分辨：2·max(Δt^{1/1.8}, Δx) ≈ 0.43
    return NoiseGrid(16, 16, 16, 1.0)


@pytest.fixture
def small_model(small_grid) -> CanonicalModel:
    return build_model(7, small_grid, Mollifier(0.5, mu=MU), kappa=0.01)


@pytest.fixture
def smooth_field():
    x = np.arange(32) / 32
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return PeriodicField(np.cos(2 * np.pi * x1) + 0.5 * np.sin(2 * np.pi * (x1 + 2 * x2)))


@pytest.fixture
def config():
    return ExperimentConfig()


@pytest.fixture
def out_dir(tmp_path):
    path = tmp_path / "out"
    path.mkdir()
    return path


@pytest.fixture(autouse=True)
def reset_logger():
    """命令行运行会挂接控制台输出，测试之间移除"""
    yield
    for handler in list(logger.handlers):
        if isinstance(handler, logging.StreamHandler):
            logger.removeHandler(handler)
    logger.setLevel(logging.NOTSET)
