"""Gauss 边缘分布：K∗ξ_ε 在若干 (t, ε) 处的联合谱采样

对每个空间模 k，X̂(t,k) = b̂_ε(k)∫∫ e^{-λ(t-u)}a_ε(u-r)dW_k(r)du，λ = (2π|k|)^{2μ}。
不同 (t, ε) 条目在同一 W 下联合 Gauss，其协方差矩阵只依赖 |k|，
按模做特征分解开方后对独立的网格白噪声作线性组合即可精确采样。
"""

from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..api import logger
from .spectral import fractional_symbol, gauss_legendre, wavenumbers

_D_NODES = 48
_W_NODES = 64


class TimeSpaceMollifier(Protocol):
    time_width: float

    def time_density(self, s: np.ndarray) -> np.ndarray: ...

    def spatial_multiplier(self, n: int) -> np.ndarray: ...


Entry = Tuple[float, Optional[TimeSpaceMollifier]]


def exp_overlap(t: float, s: float, d: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """J(t,s,d,λ) = ∫ e^{-λ(t-v-d)}e^{-λ(s-v)} dv，v ∈ (max(0,-d), min(s,t-d))

    返回形状 (len(lam), len(d))；λ=0 时取长度 b-a。
    """
    d = np.atleast_1d(np.asarray(d, dtype=float))[None, :]
    lam = np.atleast_1d(np.asarray(lam, dtype=float))[:, None]
    lower = np.maximum(0.0, -d)
    upper = np.minimum(s, t - d)
    length = np.maximum(upper - lower, 0.0)
    a_exp = t + s - d - 2.0 * upper
    safe = np.where(lam > 0, lam, 1.0)
    decay = np.exp(-lam * a_exp) * (-np.expm1(-2.0 * lam * length)) / (2.0 * safe)
    return np.where(lam > 0, decay, length + 0.0 * lam)


def _breakpoints(lo: float, hi: float, marks: Sequence[float]) -> List[float]:
    inner = sorted({m for m in marks if lo < m < hi})
    return [lo] + inner + [hi]


def time_covariance(
    t: float,
    s: float,
    lam: np.ndarray,
    first: Optional[TimeSpaceMollifier],
    second: Optional[TimeSpaceMollifier],
) -> np.ndarray:
    """Cov(X̂(t), X̂(s)) 的时间因子 ∫ A(d)J(t,s,d,λ)dd，A 为两个时间密度的互相关"""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if first is None and second is None:
        return exp_overlap(t, s, [0.0], lam)[:, 0]

    if first is None or second is None:
        mollifier = first if first is not None else second
        width = mollifier.time_width

        def correlation(d):
            return mollifier.time_density(d)

    else:
        width = first.time_width + second.time_width
        w_nodes, w_weights = gauss_legendre(_W_NODES, -first.time_width, first.time_width)

        def correlation(d):
            grid = first.time_density(w_nodes)[None, :] * second.time_density(w_nodes[None, :] - d[:, None])
            return grid @ w_weights

    total = np.zeros_like(lam)
    pieces = _breakpoints(-width, width, (0.0, t - s, t, -s))
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        d_nodes, d_weights = gauss_legendre(_D_NODES, lo, hi)
        total += exp_overlap(t, s, d_nodes, lam) @ (correlation(d_nodes) * d_weights)
    return total


class GaussianMarginal:
    """K∗ξ_ε 在条目 (t_p, ε_p) 上的联合谱采样器

    条目的 mollifier 为 None 时表示未光滑化的白噪声（ε = 0）。
    """

    def __init__(self, mu: float, n: int, entries: Sequence[Entry]):
        if not entries:
            raise ValueError("至少需要一个 (t, ε) 条目")
        for t, _ in entries:
            if t < 0:
                raise ValueError(f"时间必须非负，收到 {t}")
        self.mu = float(mu)
        self.n = int(n)
        self.entries = list(entries)
        self.size = len(self.entries)
        self._factor = self._build_factor()

    def _build_factor(self) -> np.ndarray:
        n = self.n
        k1, k2 = wavenumbers(n)
        radius_sq = (k1 ** 2 + k2 ** 2).astype(np.int64)
        unique, inverse = np.unique(radius_sq.ravel(), return_inverse=True)
        lam = (2.0 * np.pi * np.sqrt(unique)) ** (2.0 * self.mu)

        spatial = []
        for _, mollifier in self.entries:
            if mollifier is None:
                spatial.append(np.ones(unique.shape))
            else:
                multiplier = mollifier.spatial_multiplier(n).real.ravel()
                first_index = np.zeros(unique.shape, dtype=int)
                first_index[inverse] = np.arange(inverse.size)
                spatial.append(multiplier[first_index])

        covariance = np.empty((unique.size, self.size, self.size))
        for p, (t, first) in enumerate(self.entries):
            for q in range(p, self.size):
                s, second = self.entries[q]
                block = time_covariance(t, s, lam, first, second) * spatial[p] * spatial[q]
                covariance[:, p, q] = block
                covariance[:, q, p] = block

        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
        negative = eigenvalues.min()
        if negative < -1e-10 * max(eigenvalues.max(), 1e-300):
            logger.warning(f"协方差矩阵出现负特征值 {negative:.3e}，已截断为 0")
        root = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))[:, None, :]
        return root[inverse].reshape(n, n, self.size, self.size)

    def variance(self) -> np.ndarray:
        """每个条目每个模的方差 E|X̂_p(k)|²，形状 (size, n, n)"""
        return np.moveaxis(np.einsum("ijpq,ijpq->ijp", self._factor, self._factor), -1, 0)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """一次联合采样，返回各条目的 Fourier 系数，形状 (size, n, n)"""
        n = self.n
        white = rng.standard_normal((self.size, n, n)) * n
        spectra = np.fft.fft2(white, norm="forward", axes=(-2, -1))
        return np.einsum("ijpq,qij->pij", self._factor, spectra)


def stationary_variance(mu: float, n: int, t: float) -> np.ndarray:
    """未光滑化时 E|X̂(t,k)|² = (1 - e^{-2λt})/(2λ)，零模为 t"""
    lam = fractional_symbol(mu, n)
    safe = np.where(lam > 0, lam, 1.0)
    return np.where(lam > 0, -np.expm1(-2.0 * lam * t) / (2.0 * safe), t)
