"""分数阶热核、Riesz 核、二进分解与光滑化核，以及核阶数的数值验证"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .api import LemmaViolation, QuadratureError, ResolutionError, logger
from .models.field import PeriodicField
from .models.homogeneity import MultiIndex
from .models.records import ScalingFit
from .noise import Mollifier
from .services.fitting import fit_loglog
from .services.spectral import (
    derivative_multiplier,
    evaluate_series,
    fractional_symbol,
    gauss_legendre,
    inverse_sqrt_laplacian,
    riesz_multiplier,
    wavenumbers,
)
from .services.testfunctions import bump_profile

KINDS = ("heat", "heat_deriv", "riesz", "riesz_heat", "mollified")
DEFAULT_RADII = (2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6)
_LOG_MODE_TOLERANCE = 0.05


@dataclass(frozen=True)
class ParabolicScaling:
    """尺度 (2μ,1,1)：‖(t,x)‖_s = max(|t|^{1/s0}, |x|_∞)"""

    mu: float

    @property
    def s0(self) -> float:
        return 2.0 * self.mu

    @property
    def total(self) -> float:
        return self.s0 + 2.0

    def norm(self, t, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.maximum(np.abs(np.asarray(t, dtype=float)) ** (1.0 / self.s0), np.max(np.abs(x), axis=-1))

    def dilate(self, t, x, lam: float):
        return lam ** self.s0 * np.asarray(t, dtype=float), lam * np.asarray(x, dtype=float)


def parabolic_norm(t, x, mu: float) -> np.ndarray:
    return ParabolicScaling(mu).norm(t, x)


@dataclass(frozen=True)
class KernelSpec:
    """核描述：heat 为 K，heat_deriv 为 ∂_jK，riesz 为 R_i，riesz_heat 为 R_iK，mollified 为 base∗ρ_ε"""

    kind: str
    mu: float
    index: int = 1
    mollifier: Optional[Mollifier] = None
    base: Optional["KernelSpec"] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"未知核类型：{self.kind}，可选 {list(KINDS)}")
        if not (0.0 < self.mu <= 1.0):
            raise ValueError(f"μ 必须位于 (0,1]，收到 {self.mu}")
        if self.index not in (1, 2):
            raise ValueError(f"方向下标必须是 1 或 2，收到 {self.index}")
        if self.kind == "mollified" and (self.mollifier is None or self.base is None):
            raise ValueError("mollified 核需要 base 与 mollifier")

    @property
    def scaling(self) -> ParabolicScaling:
        return ParabolicScaling(self.mu)

    @property
    def beta(self) -> float:
        if self.kind == "mollified":
            return self.base.beta
        return {"heat": 2.0 * self.mu, "heat_deriv": 2.0 * self.mu - 1.0, "riesz": 0.0,
                "riesz_heat": 2.0 * self.mu}[self.kind]

    @property
    def order(self) -> float:
        """ζ = -|s| + β"""
        return -self.scaling.total + self.beta

    @property
    def label(self) -> str:
        if self.kind == "mollified":
            return f"{self.base.label}*rho_eps"
        return {"heat": "K", "heat_deriv": f"d{self.index}K", "riesz": f"R{self.index}",
                "riesz_heat": f"R{self.index}K"}[self.kind]

    def spatial_factor(self, n: int) -> np.ndarray:
        if self.kind == "heat_deriv":
            return derivative_multiplier(self.index, n)
        if self.kind in ("riesz", "riesz_heat"):
            return riesz_multiplier(self.index, n)
        return np.ones((n, n))

    def multiplier(self, t: float, n: int, derivative: Optional[MultiIndex] = None) -> np.ndarray:
        """K(t,·) 在 n×n 模上的 Fourier 系数"""
        if self.kind == "riesz":
            values = riesz_multiplier(self.index, n).astype(complex)
        elif self.kind == "mollified":
            if derivative is not None and derivative.k0 > 0:
                raise ValueError("光滑化核不支持时间导数")
            values = self._mollified_multiplier(t, n)
        elif t <= 0:
            values = np.zeros((n, n), dtype=complex)
        else:
            symbol = fractional_symbol(self.mu, n)
            values = self.spatial_factor(n) * np.exp(-t * symbol)
            if derivative is not None and derivative.k0:
                values = values * (-symbol) ** derivative.k0
        if derivative is not None and (derivative.k1 or derivative.k2):
            values = values * derivative_multiplier(1, n) ** derivative.k1 * derivative_multiplier(2, n) ** derivative.k2
        return values

    def _mollified_multiplier(self, t: float, n: int) -> np.ndarray:
        width = self.mollifier.time_width
        upper = min(width, t)
        if upper <= -width:
            return np.zeros((n, n), dtype=complex)
        nodes, weights = gauss_legendre(64, -width, upper)
        total = np.zeros((n, n), dtype=complex)
        for s, w in zip(nodes, weights * self.mollifier.time_density(nodes)):
            total += w * self.base.multiplier(t - s, n)
        return total * self.mollifier.spatial_multiplier(n)

    def grid_values(self, t: float, n: int, derivative: Optional[MultiIndex] = None) -> np.ndarray:
        return np.fft.ifft2(self.multiplier(t, n, derivative), norm="forward").real

    def evaluate(self, t: float, points, n: int = 512) -> np.ndarray:
        return evaluate_series(self.multiplier(t, n), points)


def heat(mu: float) -> KernelSpec:
    return KernelSpec("heat", mu)


def heat_deriv(j: int, mu: float) -> KernelSpec:
    return KernelSpec("heat_deriv", mu, index=j)


def riesz_heat(i: int, mu: float) -> KernelSpec:
    return KernelSpec("riesz_heat", mu, index=i)


def mollified(base: KernelSpec, mollifier: Mollifier) -> KernelSpec:
    return KernelSpec("mollified", base.mu, index=base.index, mollifier=mollifier, base=base)


@dataclass(frozen=True)
class ConvolvedKernel:
    """时空卷积 (A∗B)(t,·)，乘子为 ∫₀ᵗ m_A(t-s)m_B(s)ds（Gauss–Legendre）"""

    first: Any
    second: Any
    nodes: int = 32

    @property
    def mu(self) -> float:
        return self.first.mu

    @property
    def order(self) -> float:
        return self.first.order + self.second.order + ParabolicScaling(self.mu).total

    @property
    def label(self) -> str:
        return f"({self.first.label}*{self.second.label})"

    def multiplier(self, t: float, n: int, derivative: Optional[MultiIndex] = None) -> np.ndarray:
        if derivative is not None and not derivative.is_zero:
            raise ValueError("卷积核只支持零阶导数")
        if t <= 0:
            return np.zeros((n, n), dtype=complex)
        nodes, weights = gauss_legendre(self.nodes, 0.0, t)
        total = np.zeros((n, n), dtype=complex)
        for s, w in zip(nodes, weights):
            total += w * self.first.multiplier(t - s, n) * self.second.multiplier(s, n)
        return total

    def grid_values(self, t: float, n: int, derivative: Optional[MultiIndex] = None) -> np.ndarray:
        return np.fft.ifft2(self.multiplier(t, n, derivative), norm="forward").real


@dataclass(frozen=True)
class ProductKernel:
    """逐点乘积核 A·B，阶数为 ζ_A + ζ_B"""

    first: Any
    second: Any
    sign: float = 1.0

    @property
    def mu(self) -> float:
        return self.first.mu

    @property
    def order(self) -> float:
        return self.first.order + self.second.order

    @property
    def label(self) -> str:
        return f"{self.first.label}.{self.second.label}"

    def grid_values(self, t: float, n: int, derivative: Optional[MultiIndex] = None) -> np.ndarray:
        if derivative is not None and not derivative.is_zero:
            raise ValueError("乘积核只支持零阶导数")
        return self.sign * self.first.grid_values(t, n) * self.second.grid_values(t, n)


def heat_kernel_eval(mu: float, t: float, x: Sequence[float], mode_cut: int) -> float:
    """Σ_{|k|_∞≤mode_cut} e^{-t(2π|k|)^{2μ}}cos(2πk·x)"""
    if t <= 0:
        raise ValueError(f"热核只在 t>0 时定义，收到 t={t}")
    if mode_cut < 1:
        raise ValueError(f"截断模数至少为 1，收到 {mode_cut}")
    k = np.arange(-mode_cut, mode_cut + 1)
    k1, k2 = np.meshgrid(k, k, indexing="ij")
    weights = np.exp(-t * (2.0 * np.pi * np.hypot(k1, k2)) ** (2.0 * mu))
    phase = np.cos(2.0 * np.pi * (k1 * x[0] + k2 * x[1]))
    return float(np.sum(weights * phase))


def periodized_gaussian(t: float, x: Sequence[float], image_cut: int = 6) -> float:
    """μ=1 的周期化 Gauss 核 Σ_m (4πt)^{-1}e^{-|x+m|²/4t}"""
    m = np.arange(-image_cut, image_cut + 1)
    m1, m2 = np.meshgrid(m, m, indexing="ij")
    distance_sq = (x[0] + m1) ** 2 + (x[1] + m2) ** 2
    return float(np.sum(np.exp(-distance_sq / (4.0 * t))) / (4.0 * np.pi * t))


def semigroup_error(mu: float, t: float, s: float, n: int = 64) -> float:
    """网格上 K(t)∗K(s) 与 K(t+s) 的最大偏差"""
    spec = heat(mu)
    a = spec.grid_values(t, n)
    b = spec.grid_values(s, n)
    convolved = np.fft.ifft2(np.fft.fft2(a) * np.fft.fft2(b)).real / n ** 2
    return float(np.max(np.abs(convolved - spec.grid_values(t + s, n))))


def riesz_apply(i: int, f: PeriodicField) -> PeriodicField:
    """R_i = ∂_iΔ^{-1/2}，乘子 i·k_i/|k|"""
    return PeriodicField.from_spectrum(f.spectrum * riesz_multiplier(i, f.n))


def perp_velocity(theta: PeriodicField) -> Tuple[PeriodicField, PeriodicField]:
    """u = R^⊥θ = (-R₂θ, R₁θ)"""
    return riesz_apply(2, theta) * -1.0, riesz_apply(1, theta)


def divergence_residual(u1: PeriodicField, u2: PeriodicField) -> float:
    """max_k |k·û(k)|"""
    k1, k2 = wavenumbers(u1.n)
    return float(np.max(np.abs(k1 * u1.spectrum + k2 * u2.spectrum)))


def riesz_factorization_check(n: int = 64) -> Dict[str, float]:
    """R_i = L G：L = ∂_i（β_L = 1），G = (-Δ)^{-1/2}（1 阶光滑化）"""
    g = inverse_sqrt_laplacian(n)
    error = 0.0
    for i in (1, 2):
        error = max(error, float(np.max(np.abs(riesz_multiplier(i, n) - derivative_multiplier(i, n) * g))))
    k1, k2 = wavenumbers(n)
    modulus = np.hypot(k1, k2)
    mask = (modulus > 0) & (modulus < n / 2)
    slope = np.polyfit(np.log(modulus[mask]), np.log(g[mask]), 1)[0]
    return {"factorization_error": error, "smoothing_exponent": float(-slope), "beta_L": 1.0}


def _resolution_for(radius: float) -> int:
    target = int(2 ** np.ceil(np.log2(32.0 / radius)))
    return int(np.clip(target, 64, 1024))


def sphere_sup(kernel: Any, radius: float, derivative: Optional[MultiIndex] = None,
               n: Optional[int] = None, time_samples: int = 16) -> float:
    """sup_{‖z‖_s = r, t>0} |D^kK(z)|，在抛物球面的两个面上取样

    时间面 t = r^{s0}、|x|_∞ ≤ r；空间面 |x|_∞ = r、t ∈ (0, r^{s0}]。
    """
    s0 = 2.0 * kernel.mu
    n = n or _resolution_for(radius)
    cells = int(round(radius * n))
    if cells < 1:
        raise ResolutionError(f"半径 {radius:.4g} 在 {n} 网格上不足一个单元")
    near = np.r_[0:cells + 1, n - cells:n]

    top = kernel.grid_values(radius ** s0, n, derivative)
    best = float(np.max(np.abs(top[np.ix_(near, near)])))
    for u in np.linspace(1.0 / time_samples, 1.0, time_samples):
        values = np.abs(kernel.grid_values(u * radius ** s0, n, derivative))
        ring = max(
            np.max(values[cells, near]),
            np.max(values[n - cells, near]),
            np.max(values[near, cells]),
            np.max(values[near, n - cells]),
        )
        best = max(best, float(ring))
    return best


def _order_fit(kernel: Any, radii: Sequence[float], target: float, derivative: Optional[MultiIndex],
               label: str, residual_cap: Optional[float] = None) -> ScalingFit:
    radii = [float(r) for r in radii]
    if len(radii) < 4:
        raise ValueError(f"至少需要 4 个半径，收到 {len(radii)}")
    if any(not (0.0 < r <= 0.5) for r in radii):
        raise ValueError(f"半径必须位于 (0, 1/2]，收到 {radii}")
    sups = []
    for r in radii:
        with np.errstate(all="ignore"):
            sups.append(sphere_sup(kernel, r, derivative))
    log_mode = abs(target) < _LOG_MODE_TOLERANCE
    fit = fit_loglog(radii, sups, target=target, label=label, log_mode=log_mode,
                     meta={"kernel": label, "mu": float(kernel.mu)})
    if residual_cap is not None and fit.max_residual > residual_cap:
        raise QuadratureError(f"{label} 拟合残差 {fit.max_residual:.3g} 超过上限 {residual_cap:.3g}")
    logger.info(f"核阶数拟合 {label}：斜率 {fit.slope:.4f}，目标 {target:.4f}")
    return fit


def kernel_order_fit(spec: KernelSpec, derivative: Optional[MultiIndex] = None,
                     radii: Sequence[float] = DEFAULT_RADII) -> ScalingFit:
    """log sup_{‖z‖_s=r}|D^kK| 对 log r 的斜率，目标 ζ - |k|_s"""
    derivative = derivative or MultiIndex(0, 0, 0)
    target = spec.order - float(derivative.scaled_degree.evaluate(spec.mu, 0.0))
    return _order_fit(spec, radii, target, derivative, f"{spec.label} D^{derivative.as_tuple()}")


def convolution_order_fit(first: Any, second: Any, radii: Sequence[float] = DEFAULT_RADII,
                          residual_cap: float = 0.5) -> ScalingFit:
    """时空卷积的径向衰减，目标 ζ₁ + ζ₂ + |s|"""
    kernel = ConvolvedKernel(first, second)
    return _order_fit(kernel, radii, kernel.order, None, kernel.label, residual_cap)


def product_order_fit(first: Any, second: Any, radii: Sequence[float] = DEFAULT_RADII,
                      residual_cap: float = 0.5) -> ScalingFit:
    kernel = ProductKernel(first, second)
    return _order_fit(kernel, radii, kernel.order, None, kernel.label, residual_cap)


def covariance_kernel(mu: float, i: int = 1) -> ProductKernel:
    """(R_iK∗R_iK)·(-K∗K)"""
    return ProductKernel(ConvolvedKernel(riesz_heat(i, mu), riesz_heat(i, mu)),
                         ConvolvedKernel(heat(mu), heat(mu)), sign=-1.0)


def covariance_order(mu: float, radii: Sequence[float] = DEFAULT_RADII, i: int = 1) -> ScalingFit:
    """协方差核的径向斜率，目标 -4+4μ；μ=1 时为对数情形"""
    kernel = covariance_kernel(mu, i)
    return _order_fit(kernel, radii, -4.0 + 4.0 * mu, None, kernel.label)


def covariance_factor_error(mu: float, t: float, n: int = 128, i: int = 1) -> float:
    """协方差核与两个单独计算因子之积的逐点偏差"""
    kernel = covariance_kernel(mu, i)
    left = ConvolvedKernel(riesz_heat(i, mu), riesz_heat(i, mu)).grid_values(t, n)
    right = ConvolvedKernel(heat(mu), heat(mu)).grid_values(t, n)
    return float(np.max(np.abs(kernel.grid_values(t, n) + left * right)))


def smooth_cutoff(r: np.ndarray) -> np.ndarray:
    """χ(r)：r≤1 时为 1，r≥2 时为 0，中间光滑过渡"""
    r = np.asarray(r, dtype=float)
    left = np.where(r < 2.0, np.exp(-1.0 / np.maximum(2.0 - r, 1e-300)), 0.0)
    right = np.where(r > 1.0, np.exp(-1.0 / np.maximum(r - 1.0, 1e-300)), 0.0)
    return left / (left + right)


def annulus_cutoff(level: int, r: np.ndarray) -> np.ndarray:
    """ψ_n(r) = χ(2^n r) - χ(2^{n+1} r)，支撑在 [2^{-n-1}, 2^{-n+1}]"""
    return smooth_cutoff(2.0 ** level * r) - smooth_cutoff(2.0 ** (level + 1) * r)


@dataclass(frozen=True, eq=False)
class DyadicPiece:
    """第 n 层的核块 K_n = ψ_n(‖z‖_s)K(z) 在 (时间节点 × 空间网格) 上的取样"""

    level: int
    times: np.ndarray
    time_weights: np.ndarray
    values: np.ndarray
    n: int
    correction: Optional[np.ndarray] = None
    moment_residual: float = 0.0
    moments: Dict[str, float] = field(default_factory=dict)
    derivatives: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def support_radius(self) -> float:
        return 2.0 ** (-self.level + 1)

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def corrected(self) -> np.ndarray:
        if self.correction is None:
            return self.values
        return self.values - self.correction

    def slice_at(self, t: float, corrected: bool = False) -> np.ndarray:
        """时间节点 t 处的空间切片；t 必须是取样节点之一"""
        matches = np.flatnonzero(np.isclose(self.times, t, rtol=1e-12, atol=0.0))
        if matches.size == 0:
            raise ValueError(f"第 {self.level} 层没有时间节点 t={t}")
        values = self.corrected() if corrected else self.values
        return values[matches[0]]


def _torus_offsets(n: int) -> Tuple[np.ndarray, np.ndarray]:
    offsets = np.fft.fftfreq(n, d=1.0 / n) / n
    return np.meshgrid(offsets, offsets, indexing="ij")


def _moment_monomials(s0: float, degree: int) -> List[Tuple[int, int, int]]:
    result = []
    for k0 in range(degree + 1):
        for k1 in range(degree + 1):
            for k2 in range(degree + 1 - k1):
                if k0 * s0 + k1 + k2 <= degree + 1e-12:
                    result.append((k0, k1, k2))
    return result


def dyadic_decompose(spec: KernelSpec, n_max: int, n: int, moment_degree: int = 2,
                     time_nodes: int = 32, derivative_order: int = 0,
                     sample_times: Sequence[float] = ()) -> List[DyadicPiece]:
    """K = Σ_n K_n，ψ_n 为抛物环形单位分解；可选近似矩修正（单独存放）

    sample_times 以零求积权重追加到每层的时间节点，供逐点重组比较，不影响矩。
    """
    if spec.kind not in ("heat", "heat_deriv"):
        raise ValueError(f"二进分解只支持 heat / heat_deriv，收到 {spec.kind}")
    if n_max > np.log2(n) - 2:
        raise ResolutionError(f"n_max={n_max} 超过网格 {n} 允许的 log2(n)-2")
    scaling = spec.scaling
    s0 = scaling.s0
    x1, x2 = _torus_offsets(n)
    spatial_norm = np.maximum(np.abs(x1), np.abs(x2))
    resolved_time = 27.6 / (np.pi * n) ** (2.0 * spec.mu)
    extra = np.asarray(sample_times, dtype=float)
    if np.any(extra <= 0):
        raise ValueError(f"取样时刻必须为正，收到 {list(sample_times)}")
    pieces: List[DyadicPiece] = []

    for level in range(n_max + 1):
        radius = 2.0 ** (-level + 1)
        if radius * n < 4:
            raise ResolutionError(f"第 {level} 层支撑内不足 4 个网格点")
        t_max = min(radius ** s0, 1.0)
        t_min = min(resolved_time, 0.5 * t_max)
        times, weights = gauss_legendre(time_nodes, t_min, t_max)
        if extra.size:
            times = np.concatenate([times, extra])
            weights = np.concatenate([weights, np.zeros(extra.size)])
        values = np.empty((times.size, n, n))
        for q, t in enumerate(times):
            norm = np.maximum(t ** (1.0 / s0), spatial_norm)
            values[q] = annulus_cutoff(level, norm) * spec.grid_values(t, n)

        correction, residual, moments = _moment_correction(values, times, weights, x1, x2, level, s0,
                                                           moment_degree, n)
        derivatives = {}
        for k1 in range(derivative_order + 1):
            for k2 in range(derivative_order + 1 - k1):
                if k1 or k2:
                    multiplier = derivative_multiplier(1, n) ** k1 * derivative_multiplier(2, n) ** k2
                    derivatives[(k1, k2)] = np.fft.ifft2(
                        np.fft.fft2(values, axes=(-2, -1)) * multiplier, axes=(-2, -1)
                    ).real
        pieces.append(DyadicPiece(level=level, times=times, time_weights=weights, values=values,
                                  n=n, correction=correction, moment_residual=residual, moments=moments,
                                  derivatives=derivatives))
        logger.debug(f"二进块 {level}：sup={pieces[-1].sup():.4g}，矩残差 {residual:.3e}")
    return pieces


def _moment_correction(values, times, weights, x1, x2, level, s0, degree, n):
    """把 K_n 在 (多项式 × 参考凸包) 上的投影减掉，使 ∫K_nP ≈ 0"""
    if degree < 0:
        return None, 0.0, {}
    t_scale = 2.0 ** (-level * s0)
    x_scale = 2.0 ** (-level)
    tt = (times / t_scale)[:, None, None]
    y1 = (x1 / x_scale)[None]
    y2 = (x2 / x_scale)[None]
    cell = 1.0 / n ** 2
    quad = weights[:, None, None] * cell
    reference = bump_profile((tt - 1.5) ** 2) * bump_profile(y1 ** 2 + y2 ** 2)
    monomials = _moment_monomials(s0, degree)
    basis = [tt ** k0 * y1 ** k1 * y2 ** k2 for k0, k1, k2 in monomials]
    gram = np.array([[np.sum(p * q * reference * quad) for q in basis] for p in basis])
    raw = np.array([np.sum(values * p * quad) for p in basis])
    coefficients = np.linalg.lstsq(gram, raw, rcond=None)[0]
    correction = sum(c * p * reference for c, p in zip(coefficients, basis))
    residual_moments = np.array([np.sum((values - correction) * p * quad) for p in basis])
    scale = max(float(np.max(np.abs(raw))), 1e-300)
    moments = {str(m): float(v) for m, v in zip(monomials, raw)}
    return correction, float(np.max(np.abs(residual_moments)) / scale), moments


def reassemble(pieces: Sequence[DyadicPiece], t: float, corrected: bool = False) -> np.ndarray:
    """Σ_n K_n 在时间节点 t 的网格值，直接累加各层的取样"""
    if not pieces:
        raise ValueError("没有可重组的二进块")
    return sum(piece.slice_at(t, corrected) for piece in pieces)


def reassembly_error(pieces: Sequence[DyadicPiece], spec: KernelSpec, t: float) -> Dict[str, Any]:
    """‖z‖_s ∈ [2^{-n_max+1}, 1/2] 上 |Σ_n K_n - K| / |K| 的最大值"""
    n = pieces[0].n
    n_max = max(piece.level for piece in pieces)
    x1, x2 = _torus_offsets(n)
    norm = np.maximum(t ** (1.0 / spec.scaling.s0), np.maximum(np.abs(x1), np.abs(x2)))
    mask = (norm >= 2.0 ** (-n_max + 1)) & (norm <= 0.5)
    if not np.any(mask):
        raise ValueError(f"t={t} 时没有落在 [2^{-n_max + 1}, 1/2] 内的网格点")
    exact = spec.grid_values(t, n)[mask]
    difference = np.abs(reassemble(pieces, t)[mask] - exact)
    relative = difference / np.maximum(np.abs(exact), 1e-300)
    return {"t": float(t), "n_max": n_max, "points": int(mask.sum()),
            "max_relative_error": float(np.max(relative))}


def piece_bound_fit(pieces: Sequence[DyadicPiece], levels: Optional[Sequence[int]] = None,
                    target: Optional[float] = None) -> ScalingFit:
    """log₂ sup|K_n| 关于 n 的斜率"""
    chosen = [p for p in pieces if levels is None or p.level in levels]
    return fit_loglog([2.0 ** p.level for p in chosen], [p.sup() for p in chosen], target=target,
                      label="dyadic_bound", meta={"levels": [p.level for p in chosen]})


def _mollified_point_values(spec: KernelSpec, mollifier: Mollifier, points, n: int):
    smooth = mollified(spec, mollifier)
    smooth_values = []
    differences = []
    for t, x in points:
        value = float(smooth.evaluate(t, [x], n)[0])
        smooth_values.append(abs(value))
        differences.append(abs(float(spec.evaluate(t, [x], n)[0]) - value))
    return np.array(smooth_values), np.array(differences)


def mollified_kernel_check(
    spec: KernelSpec,
    eps_list: Sequence[float] = (2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6),
    nu: float = 0.5,
    profile: str = "bump",
    radii: Sequence[float] = (2.0 ** -2, 2.0 ** -3, 2.0 ** -4, 2.0 ** -5),
    growth_factor: float = 3.0,
    n: int = 512,
    fixed_point: Tuple[float, Tuple[float, float]] = (0.2, (0.2, 0.0)),
    strict: bool = True,
) -> Dict[str, Any]:
    """|K_ε(z)|(‖z‖_s+ε)^{-ζ} 与 |K-K_ε|ε^{-ν}‖z‖_s^{ν-ζ} 在 ε 序列上的一致有界性"""
    zeta = spec.order
    if not (-spec.scaling.total < zeta < 0):
        raise ValueError(f"需要 ζ ∈ (-|s|, 0)，收到 {zeta}")
    if not (0.0 < nu <= 1.0):
        raise ValueError(f"ν 必须位于 (0,1]，收到 {nu}")
    s0 = spec.scaling.s0
    first_sups: List[float] = []
    second_sups: List[float] = []
    pointwise: List[float] = []
    for eps in eps_list:
        mollifier = Mollifier(eps, profile=profile, mu=spec.mu)
        sample_radii = sorted(set(list(radii) + [0.5 * eps, eps, 2.0 * eps]))
        points = []
        for r in sample_radii:
            points.append((r ** s0, (0.0, 0.0)))
            points.append(((0.5 * r) ** s0, (r, 0.0)))
        norms = np.array([max(t ** (1.0 / s0), max(abs(x[0]), abs(x[1]))) for t, x in points])
        smooth_values, differences = _mollified_point_values(spec, mollifier, points, n)
        first_sups.append(float(np.max(smooth_values * (norms + eps) ** (-zeta))))
        second_sups.append(float(np.max(differences * eps ** (-nu) * norms ** (nu - zeta))))
        _, fixed_difference = _mollified_point_values(spec, mollifier, [fixed_point], n)
        pointwise.append(float(fixed_difference[0]))

    first_ratio = max(first_sups) / min(first_sups)
    second_ratio = max(second_sups) / min(second_sups)
    report = {
        "kernel": spec.label,
        "eps": [float(e) for e in eps_list],
        "nu": float(nu),
        "zeta": float(zeta),
        "first_sup": first_sups,
        "second_sup": second_sups,
        "first_ratio": float(first_ratio),
        "second_ratio": float(second_ratio),
        "pointwise_difference": pointwise,
        "growth_factor": float(growth_factor),
    }
    if strict and (first_ratio > growth_factor or second_ratio > growth_factor):
        raise LemmaViolation(f"光滑化核界在 ε 序列上不一致：比值 {first_ratio:.3g} / {second_ratio:.3g}")
    return report


def full_space_kernel(mu: float, t: float, x: Sequence[float]) -> float:
    """全平面核 ∫₀^∞ e^{-t(2πρ)^{2μ}}J₀(2πρ|x|)2πρ dρ（Hankel 求积）"""
    if t <= 0:
        raise ValueError(f"需要 t>0，收到 {t}")
    radius = float(np.hypot(x[0], x[1]))
    rho_max = (40.0 / t) ** (1.0 / (2.0 * mu)) / (2.0 * np.pi)

    def integrand(rho):
        return np.exp(-t * (2.0 * np.pi * rho) ** (2.0 * mu)) * special.j0(2.0 * np.pi * rho * radius) * 2.0 * np.pi * rho

    breaks = None
    if radius > 0:
        zeros = special.jn_zeros(0, 200) / (2.0 * np.pi * radius)
        breaks = [z for z in zeros if z < rho_max][:100]
    value, _ = integrate.quad(integrand, 0.0, rho_max, points=breaks, limit=500, epsabs=1e-13, epsrel=1e-11)
    return float(value)


def scaling_law_check(mu: float, times: Sequence[float] = (0.01, 0.03, 0.1),
                      x: Sequence[float] = (0.05, 0.02)) -> Dict[str, Any]:
    """K(t,x) 与 t^{-1/μ}K(1, t^{-1/2μ}x) 的相对偏差"""
    errors = []
    for t in times:
        direct = full_space_kernel(mu, t, x)
        rescaled = t ** (-1.0 / mu) * full_space_kernel(mu, 1.0, np.asarray(x) * t ** (-1.0 / (2.0 * mu)))
        errors.append(abs(direct - rescaled) / max(abs(direct), 1e-300))
    return {"mu": float(mu), "times": [float(t) for t in times], "relative_errors": errors,
            "max_relative_error": float(max(errors))}

