"""环面 [0,1)² 上的周期场"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True, eq=False)
class PeriodicField:
    """均匀网格上的实值函数；谱视图为 Fourier 系数 f̂(k) = ∫ f e^{-2πik·x}dx"""

    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f"周期场必须是二维数组，收到形状 {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_spectrum(cls, coefficients: np.ndarray) -> "PeriodicField":
        return cls(np.fft.ifft2(coefficients, norm="forward").real)

    @property
    def shape(self):
        return self.values.shape

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return 1.0 / self.values.shape[0]

    @cached_property
    def spectrum(self) -> np.ndarray:
        coefficients = np.fft.fft2(self.values, norm="forward")
        coefficients.setflags(write=False)
        return coefficients

    def mean(self) -> float:
        return float(self.values.mean())

    def l2_norm(self) -> float:
        return float(np.sqrt(np.mean(self.values ** 2)))

    def inner(self, other: "PeriodicField") -> float:
        return float(np.mean(self.values * other.values))

    def __add__(self, other: "PeriodicField") -> "PeriodicField":
        return PeriodicField(self.values + other.values)

    def __sub__(self, other: "PeriodicField") -> "PeriodicField":
        return PeriodicField(self.values - other.values)

    def __mul__(self, factor: float) -> "PeriodicField":
        return PeriodicField(self.values * factor)

    __rmul__ = __mul__

    def reality_residual(self) -> float:
        """max |f̂(-k) - conj f̂(k)|"""
        coefficients = self.spectrum
        mirrored = np.roll(np.flip(coefficients, axis=(0, 1)), shift=1, axis=(0, 1))
        return float(np.max(np.abs(mirrored - np.conj(coefficients))))

    def grid(self):
        x = np.arange(self.n) / self.n
        return np.meshgrid(x, x, indexing="ij")
