"""谱工具：整数波数、Fourier 乘子与指数积分权重"""

from functools import lru_cache
from typing import Callable, Tuple

import numpy as np
from scipy import special


@lru_cache(maxsize=32)
def wavenumbers(n: int) -> Tuple[np.ndarray, np.ndarray]:
    """n×n 网格的整数波数 (k1, k2)，indexing='ij'"""
    k = np.fft.fftfreq(n, d=1.0 / n)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    k1.setflags(write=False)
    k2.setflags(write=False)
    return k1, k2


@lru_cache(maxsize=32)
def nyquist_mask(n: int) -> np.ndarray:
    """去掉 Nyquist 行列的掩码（奇数阶乘子在该处无法保持实值）"""
    k1, k2 = wavenumbers(n)
    mask = np.ones((n, n), dtype=bool)
    if n % 2 == 0:
        mask &= np.abs(k1) != n // 2
        mask &= np.abs(k2) != n // 2
    mask.setflags(write=False)
    return mask


def fractional_symbol(mu: float, n: int) -> np.ndarray:
    """(2π|k|)^{2μ}"""
    k1, k2 = wavenumbers(n)
    return (2.0 * np.pi * np.hypot(k1, k2)) ** (2.0 * mu)


def heat_multiplier(mu: float, t: float, n: int) -> np.ndarray:
    return np.exp(-t * fractional_symbol(mu, n))


def derivative_multiplier(j: int, n: int) -> np.ndarray:
    """∂_j 的乘子 2πi k_j，Nyquist 置零"""
    if j not in (1, 2):
        raise ValueError(f"导数方向必须是 1 或 2，收到 {j}")
    k1, k2 = wavenumbers(n)
    k = k1 if j == 1 else k2
    return np.where(nyquist_mask(n), 2j * np.pi * k, 0.0)


def riesz_multiplier(i: int, n: int) -> np.ndarray:
    """R_i = ∂_iΔ^{-1/2} 的乘子 i·k_i/|k|；零模与 Nyquist 置零"""
    if i not in (1, 2):
        raise ValueError(f"Riesz 方向必须是 1 或 2，收到 {i}")
    k1, k2 = wavenumbers(n)
    k = k1 if i == 1 else k2
    modulus = np.hypot(k1, k2)
    safe = np.where(modulus > 0, modulus, 1.0)
    multiplier = np.where((modulus > 0) & nyquist_mask(n), 1j * k / safe, 0.0)
    return multiplier


def inverse_sqrt_laplacian(n: int) -> np.ndarray:
    """G = (-Δ)^{-1/2} 的乘子 1/(2π|k|)，零模置零"""
    k1, k2 = wavenumbers(n)
    modulus = 2.0 * np.pi * np.hypot(k1, k2)
    return np.where(modulus > 0, 1.0 / np.where(modulus > 0, modulus, 1.0), 0.0)


def dealias_mask(n: int, fraction: float = 2.0 / 3.0) -> np.ndarray:
    """保留 |k_i| < fraction·n/2 的模"""
    if not (0.5 < fraction <= 1.0):
        raise ValueError(f"去混叠比例必须位于 (1/2, 1]，收到 {fraction}")
    k1, k2 = wavenumbers(n)
    cutoff = fraction * n / 2.0
    mask = (np.abs(k1) < cutoff) & (np.abs(k2) < cutoff)
    if fraction == 1.0:
        mask = nyquist_mask(n).copy()
    return mask


def phi1(z: np.ndarray) -> np.ndarray:
    """φ₁(z) = (1 - e^{-z})/z，z→0 时取 1"""
    z = np.asarray(z, dtype=float)
    safe = np.where(z > 1e-12, z, 1.0)
    return np.where(z > 1e-12, -np.expm1(-safe) / safe, 1.0 - 0.5 * z)


def apply_multiplier(values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
    """对最后两个轴作用 Fourier 乘子，返回实部"""
    coefficients = np.fft.fft2(values, norm="forward", axes=(-2, -1))
    return np.fft.ifft2(coefficients * multiplier, norm="forward", axes=(-2, -1)).real


def evaluate_series(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    """在任意点 x (..., 2) 处求 Σ_k ĉ(k)e^{2πik·x} 的实部"""
    n = coefficients.shape[-1]
    k1, k2 = wavenumbers(n)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    phase = np.exp(2j * np.pi * (x[:, 0, None, None] * k1 + x[:, 1, None, None] * k2))
    return np.einsum("pij,ij->p", phase, coefficients).real


@lru_cache(maxsize=8)
def gauss_legendre(count: int, lower: float = 0.0, upper: float = 1.0) -> Tuple[np.ndarray, np.ndarray]:
    """[lower, upper] 上的 Gauss–Legendre 节点与权重（缓存共享，只读）"""
    nodes, weights = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (upper - lower)
    nodes = lower + half * (nodes + 1.0)
    weights = half * weights
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def radial_fourier(profile: Callable[[np.ndarray], np.ndarray], rho: np.ndarray, nodes: int = 256) -> np.ndarray:
    """支撑在单位圆盘的径向函数 f(|x|) 的平面 Fourier 变换 2π∫₀¹ f(r)J₀(2πρr) r dr"""
    rho = np.asarray(rho, dtype=float)
    unique, inverse = np.unique(rho.ravel(), return_inverse=True)
    r, w = gauss_legendre(nodes)
    weights = 2.0 * np.pi * w * r * profile(r)
    values = special.j0(2.0 * np.pi * np.outer(unique, r)) @ weights
    return values[inverse].reshape(rho.shape)
