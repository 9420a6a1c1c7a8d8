"""缩放测试函数 φ^λ_x 及其谱表示"""

from dataclasses import dataclass
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import integrate

from .spectral import radial_fourier, wavenumbers

# r = 2 的测试函数族：凸包函数及其一阶、二阶空间导数
FAMILY_DERIVATIVES: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


def bump_profile(u: np.ndarray) -> np.ndarray:
    """b(u) = exp(-1/(1-u))，u 为半径平方，支撑在 u < 1"""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = u < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - u[inside]))
    return out


def time_profile(s: np.ndarray) -> np.ndarray:
    """一维凸包 exp(1 - 1/(1-s²))，最大值 1，支撑在 |s| < 1"""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def radial_transform(rho: np.ndarray) -> np.ndarray:
    """径向凸包 b(|x|²) 的平面 Fourier 变换"""
    return radial_fourier(lambda r: bump_profile(r ** 2), rho)


@lru_cache(maxsize=1)
def bump_mass() -> float:
    """∫_{R²} b(|x|²)dx"""
    value, _ = integrate.quad(lambda v: np.exp(-1.0 / v), 0.0, 1.0)
    return float(np.pi * value)


@lru_cache(maxsize=1)
def time_profile_mass() -> float:
    value, _ = integrate.quad(lambda s: float(time_profile(np.array([s]))[0]), -1.0, 1.0)
    return float(value)


@lru_cache(maxsize=1)
def c2_norm() -> float:
    """凸包 C² 范数：max_{|k|≤2} sup|D^k b|，在细网格上用解析导数求得"""
    x = np.linspace(-1.0, 1.0, 801)
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    u = x1 ** 2 + x2 ** 2
    b = bump_profile(u)
    inside = u < 1.0
    g1 = np.zeros_like(u)
    g2 = np.zeros_like(u)
    g1[inside] = -1.0 / (1.0 - u[inside]) ** 2
    g2[inside] = -2.0 / (1.0 - u[inside]) ** 3
    candidates = [b, b * g1 * 2 * x1, b * g1 * 2 * x2]
    for xi, xj, delta in ((x1, x1, 1.0), (x1, x2, 0.0), (x2, x2, 1.0)):
        candidates.append(b * ((g1 ** 2 + g2) * 4 * xi * xj + g1 * 2 * delta))
    return float(max(np.max(np.abs(c)) for c in candidates))


@dataclass(frozen=True)
class TestFunction:
    """缩放测试函数 ψ = (D^k φ)^λ_x，φ 为按 C² 范数归一的凸包

    空间形式 λ^{-2}φ(λ^{-1}(y-x))；时空形式再乘以 λ^{-s0}a(λ^{-s0}(s-t))。
    """

    __test__ = False

    scale: float
    center: Tuple[float, float] = (0.0, 0.0)
    derivative: Tuple[int, int] = (0, 0)
    variant: str = "spatial"
    t: float = 0.0
    s0: float = 2.0

    def __post_init__(self):
        if not (0.0 < self.scale <= 1.0):
            raise ValueError(f"测试函数尺度必须位于 (0,1]，收到 {self.scale}")
        if self.variant not in ("spatial", "space-time"):
            raise ValueError(f"未知测试函数类型：{self.variant}")

    def spectrum(self, n: int) -> np.ndarray:
        """周期化后 ψ 的 Fourier 系数"""
        k1, k2 = wavenumbers(n)
        lam = self.scale
        coefficients = radial_transform(lam * np.hypot(k1, k2)) / c2_norm()
        a, b = self.derivative
        if a or b:
            coefficients = coefficients * (2j * np.pi * lam * k1) ** a * (2j * np.pi * lam * k2) ** b
        x1, x2 = self.center
        return coefficients * np.exp(-2j * np.pi * (k1 * x1 + k2 * x2))

    def values(self, n: int) -> np.ndarray:
        return np.fft.ifft2(self.spectrum(n), norm="forward").real

    def spatial_mass(self) -> float:
        if any(self.derivative):
            return 0.0
        return bump_mass() / c2_norm()

    def mass(self) -> float:
        if self.variant == "spatial":
            return self.spatial_mass()
        return self.spatial_mass() * time_profile_mass()

    def time_weights(self, times: np.ndarray, dt: float) -> np.ndarray:
        """时间求积权重 λ^{-s0}a((s-t)/λ^{s0})·dt"""
        width = self.scale ** self.s0
        return time_profile((np.asarray(times, dtype=float) - self.t) / width) * dt / width

    def pair(self, coefficients: np.ndarray) -> float:
        """⟨f, ψ⟩ = Σ_k f̂(k)·conj(ψ̂(k))"""
        return float(np.real(np.sum(coefficients * np.conj(self.spectrum(coefficients.shape[-1])))))

    def with_center(self, center: Tuple[float, float]) -> "TestFunction":
        return TestFunction(self.scale, tuple(center), self.derivative, self.variant, self.t, self.s0)


def derivative_family(scale: float, order: int = 2) -> List[TestFunction]:
    """中心在原点的测试函数族，order 为最高导数阶"""
    return [TestFunction(scale, derivative=k) for k in FAMILY_DERIVATIVES if sum(k) <= order]
