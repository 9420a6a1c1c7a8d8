"""离散时空白噪声：采样、ε 光滑化与二阶 Wiener 混沌估计"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from .api import ResolutionError, logger
from .models.field import PeriodicField
from .models.records import ChaosEstimate, IsometryRow, MomentRow, ScalingFit
from .services.fitting import fit_loglog
from .services.montecarlo import MonteCarloRunner, make_generator, moment_row, power_warnings
from .services.spectral import radial_fourier, wavenumbers
from .services.testfunctions import bump_profile, time_profile

PROFILES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "bump": lambda u: bump_profile(np.asarray(u, dtype=float) ** 2),
    "flat": lambda u: bump_profile(np.asarray(u, dtype=float) ** 4),
}
SCALINGS = ("parabolic", "literal")
CHAOS_NORMALIZATIONS = ("hermite", "wick")


@dataclass(frozen=True)
class NoiseGrid:
    """[0,T]×T² 上的均匀单元网格"""

    nt: int
    nx: int
    ny: int
    T: float = 1.0

    def __post_init__(self):
        for name in ("nt", "nx", "ny"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"网格维度 {name} 至少为 2，收到 {getattr(self, name)}")
        if self.T <= 0:
            raise ValueError(f"时间区间长度必须为正，收到 {self.T}")

    @property
    def shape(self):
        return (self.nt, self.nx, self.ny)

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def dx(self) -> float:
        return 1.0 / self.nx

    @property
    def dy(self) -> float:
        return 1.0 / self.ny

    @property
    def cell_volume(self) -> float:
        return self.dt * self.dx * self.dy

    def times(self) -> np.ndarray:
        return np.arange(self.nt) * self.dt

    def to_dict(self) -> Dict[str, Any]:
        return {"nt": self.nt, "nx": self.nx, "ny": self.ny, "T": float(self.T)}


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """一次白噪声实现；单元值方差为 (ΔtΔxΔy)^{-1}"""

    seed: int
    grid: NoiseGrid
    values: np.ndarray
    realization: int = 0

    def pair(self, phi: np.ndarray) -> float:
        """⟨ξ, φ⟩ = Σ 单元值·φ·ΔtΔxΔy"""
        return float(np.sum(self.values * phi) * self.grid.cell_volume)

    def scaled(self, factor: float) -> "NoiseRealization":
        return NoiseRealization(self.seed, self.grid, self.values * factor, self.realization)

    def __add__(self, other: "NoiseRealization") -> "NoiseRealization":
        return NoiseRealization(self.seed, self.grid, self.values + other.values, self.realization)


def _layer_normals(seed: int, realization: int, i: int, count: int) -> np.ndarray:
    """(seed, realization, i) 派生的 Philox 流前 count 个 64 位输出，经逆正态分布函数变换"""
    raw = make_generator(seed, realization, i).bit_generator.random_raw(count)
    uniforms = ((raw >> np.uint64(11)).astype(float) + 0.5) * 2.0 ** -53
    return special.ndtri(uniforms)


def sample(seed: int, grid: NoiseGrid, realization: int = 0) -> NoiseRealization:
    """计数器型白噪声：单元 (i,j,k) 取第 i 层随机流的第 j·ny+k 个输出

    每个单元值只取决于 (seed, realization, i, j, k) 与行宽 ny；
    Δt 不变时增加时间层不改变已有单元；增加行数只改变 (ΔtΔxΔy)^{-1/2} 缩放。
    """
    values = np.empty(grid.shape)
    scale = 1.0 / np.sqrt(grid.cell_volume)
    for i in range(grid.nt):
        values[i] = _layer_normals(seed, realization, i, grid.nx * grid.ny).reshape(grid.nx, grid.ny) * scale
    values.setflags(write=False)
    return NoiseRealization(seed=int(seed), grid=grid, values=values, realization=int(realization))


def cell_value(seed: int, grid: NoiseGrid, i: int, j: int, k: int, realization: int = 0) -> float:
    """sample(seed, grid, realization).values[i, j, k]，只生成该层所需的前缀"""
    if not (0 <= i < grid.nt and 0 <= j < grid.nx and 0 <= k < grid.ny):
        raise IndexError(f"单元 {(i, j, k)} 超出网格 {grid.shape}")
    scale = 1.0 / np.sqrt(grid.cell_volume)
    return float(_layer_normals(seed, realization, i, j * grid.ny + k + 1)[-1] * scale)


def zero_realization(grid: NoiseGrid) -> NoiseRealization:
    return NoiseRealization(seed=0, grid=grid, values=np.zeros(grid.shape))


def restrict(xi: NoiseRealization) -> NoiseRealization:
    """空间全加权 (1/4, 1/2, 1/4) 限制到一半分辨率，保持 Σ 值·体积"""
    grid = xi.grid
    if grid.nx % 2 or grid.ny % 2:
        raise ValueError(f"限制需要偶数空间分辨率，收到 {grid.nx}×{grid.ny}")
    values = np.asarray(xi.values)
    for axis in (1, 2):
        values = 0.25 * np.roll(values, 1, axis=axis) + 0.5 * values + 0.25 * np.roll(values, -1, axis=axis)
    coarse = values[:, ::2, ::2].copy()
    coarse.setflags(write=False)
    coarse_grid = NoiseGrid(grid.nt, grid.nx // 2, grid.ny // 2, grid.T)
    return NoiseRealization(xi.seed, coarse_grid, coarse, xi.realization)


@lru_cache(maxsize=8)
def _profile_masses(profile: str):
    shape = PROFILES[profile]
    time_mass, _ = integrate.quad(lambda s: float(shape(np.array([abs(s)]))[0]), -1.0, 1.0, epsabs=1e-14)
    radial_mass, _ = integrate.quad(lambda r: float(shape(np.array([r]))[0]) * r, 0.0, 1.0, epsabs=1e-14)
    return time_mass, 2.0 * np.pi * radial_mass


@dataclass(frozen=True)
class Mollifier:
    """可分离的偶光滑子 ρ(t,x) = a(t)b(|x|)，支撑在抛物单位球内，总质量 1

    ρ_ε(t,x) = ε^{-(s0+2)}ρ(ε^{-s0}t, ε^{-1}x)；scaling="literal" 时时间按 ε² 缩放。
    """

    eps: float
    profile: str = "bump"
    mu: float = 1.0
    scaling: str = "parabolic"

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError(f"光滑化尺度必须为正，收到 {self.eps}")
        if self.profile not in PROFILES:
            raise ValueError(f"未知光滑子形状：{self.profile}，可选 {sorted(PROFILES)}")
        if self.scaling not in SCALINGS:
            raise ValueError(f"未知时间缩放：{self.scaling}，可选 {list(SCALINGS)}")

    @property
    def s0(self) -> float:
        return 2.0 * self.mu

    @property
    def time_exponent(self) -> float:
        return self.s0 if self.scaling == "parabolic" else 2.0

    @property
    def time_width(self) -> float:
        return self.eps ** self.time_exponent

    def time_density(self, s: np.ndarray) -> np.ndarray:
        time_mass, _ = _profile_masses(self.profile)
        width = self.time_width
        return PROFILES[self.profile](np.abs(np.asarray(s, dtype=float)) / width) / (time_mass * width)

    def spatial_density(self, r: np.ndarray) -> np.ndarray:
        _, space_mass = _profile_masses(self.profile)
        return PROFILES[self.profile](np.asarray(r, dtype=float) / self.eps) / (space_mass * self.eps ** 2)

    def spatial_transform(self, rho: np.ndarray) -> np.ndarray:
        """空间因子在频率模长 ρ 处的 Fourier 变换 b̂(ερ)"""
        _, space_mass = _profile_masses(self.profile)
        shape = PROFILES[self.profile]
        return radial_fourier(lambda r: shape(r) / space_mass, self.eps * np.asarray(rho, dtype=float))

    def spatial_multiplier(self, n: int) -> np.ndarray:
        k1, k2 = wavenumbers(n)
        return self.spatial_transform(np.hypot(k1, k2))

    def density(self, t: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.time_density(t) * self.spatial_density(np.hypot(x1, x2))

    def mass(self) -> float:
        """独立求积得到的 ∫ρ_ε"""
        width = self.time_width
        time_mass, _ = integrate.quad(lambda s: float(self.time_density(np.array([s]))[0]), -width, width)
        radial, _ = integrate.quad(lambda r: float(self.spatial_density(np.array([r]))[0]) * r, 0.0, self.eps)
        return float(time_mass * 2.0 * np.pi * radial)

    def with_eps(self, eps: float) -> "Mollifier":
        return Mollifier(eps, self.profile, self.mu, self.scaling)

    def check_resolved(self, grid: NoiseGrid) -> None:
        needed = 2.0 * max(grid.dt ** (1.0 / self.time_exponent), grid.dx, grid.dy)
        if self.eps < needed:
            raise ResolutionError(f"ε={self.eps:.4g} 未被网格分辨，至少需要 {needed:.4g}")

    def kernel_grid(self, grid: NoiseGrid) -> np.ndarray:
        """周期网格上离散归一化（Σ 核·ΔV = 1）的 ρ_ε"""
        offsets_t = np.fft.fftfreq(grid.nt, d=1.0 / grid.nt) * grid.dt
        offsets_x = np.fft.fftfreq(grid.nx, d=1.0 / grid.nx) * grid.dx
        offsets_y = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny) * grid.dy
        tt, xx, yy = np.meshgrid(offsets_t, offsets_x, offsets_y, indexing="ij")
        kernel = self.density(tt, xx, yy)
        total = kernel.sum() * grid.cell_volume
        if total <= 0:
            raise ResolutionError(f"ε={self.eps:.4g} 的离散核为零")
        return kernel / total


@dataclass(frozen=True, eq=False)
class MollifiedNoise:
    """ξ_ε = ρ_ε ∗ ξ 的网格值，形状 (nt, nx, ny)"""

    values: np.ndarray
    grid: NoiseGrid
    eps: float

    def slice(self, index: int) -> PeriodicField:
        return PeriodicField(self.values[index])

    def slices(self) -> List[PeriodicField]:
        return [PeriodicField(v) for v in self.values]

    def mean(self) -> float:
        return float(np.mean(self.values))


def mollify(xi: NoiseRealization, mollifier: Mollifier) -> MollifiedNoise:
    """周期时空卷积（时间方向按 [0,T] 周期延拓）"""
    mollifier.check_resolved(xi.grid)
    kernel = mollifier.kernel_grid(xi.grid)
    transformed = np.fft.rfftn(xi.values) * np.fft.rfftn(kernel)
    values = np.fft.irfftn(transformed, s=xi.grid.shape) * xi.grid.cell_volume
    values.setflags(write=False)
    logger.debug(f"已光滑化噪声：ε={mollifier.eps:.4g}，网格 {xi.grid.shape}")
    return MollifiedNoise(values=values, grid=xi.grid, eps=mollifier.eps)


def space_time_bump(grid: NoiseGrid, center, scale: float, s0: float) -> np.ndarray:
    """网格上的 φ^λ_{(t,x)}(s,y) = λ^{-(s0+2)}a(λ^{-s0}(s-t))b(λ^{-1}|y-x|)，空间周期"""
    t0, x0, y0 = center
    times = (np.arange(grid.nt) + 0.5) * grid.dt
    xs = np.arange(grid.nx) * grid.dx
    ys = np.arange(grid.ny) * grid.dy
    dx = (xs - x0 + 0.5) % 1.0 - 0.5
    dy = (ys - y0 + 0.5) % 1.0 - 0.5
    a = time_profile((times - t0) / scale ** s0)
    b = bump_profile((dx[:, None] ** 2 + dy[None, :] ** 2) / scale ** 2)
    return a[:, None, None] * b[None, :, :] / scale ** (s0 + 2.0)


def isometry_check(
    seed: int,
    grid: NoiseGrid,
    pairs: Sequence[Tuple[np.ndarray, np.ndarray]],
    n_realizations: int = 10_000,
    runner: Optional[MonteCarloRunner] = None,
) -> List[IsometryRow]:
    """对每对 (φ, ψ) 用 sample 的前 n_realizations 个实现估计 E[⟨ξ,φ⟩⟨ξ,ψ⟩]，与 (φ,ψ)_{L²} 比较"""
    if not pairs:
        raise ValueError("至少需要一对测试函数")
    tests = []
    for phi, psi in pairs:
        for f in (phi, psi):
            f = np.asarray(f, dtype=float)
            if f.shape != grid.shape:
                raise ValueError(f"测试函数形状 {f.shape} 与网格 {grid.shape} 不一致")
            tests.append(f.ravel())
    tests = np.stack(tests)
    runner = runner or MonteCarloRunner(seed, chunk_size=500)

    def block(start, count):
        return np.stack([tests @ sample(seed, grid, r).values.ravel() * grid.cell_volume
                         for r in range(start, start + count)])

    pairings = runner.run_blocks(block, n_realizations)
    rows = []
    for p in range(len(pairs)):
        phi, psi = tests[2 * p], tests[2 * p + 1]
        products = pairings[:, 2 * p] * pairings[:, 2 * p + 1]
        norm_product = float(np.sqrt(np.sum(phi ** 2) * np.sum(psi ** 2)) * grid.cell_volume)
        rows.append(IsometryRow(
            exact=float(np.sum(phi * psi) * grid.cell_volume),
            estimate=float(np.mean(products)),
            stderr=float(np.std(products, ddof=1) / np.sqrt(products.size)),
            norm_product=norm_product,
            n=int(products.size),
        ))
    logger.info(f"白噪声等距检查：{len(rows)} 对，最大 |z| = {max(abs(r.z_score) for r in rows):.3g}")
    return rows


def regularity_grid(lam: float, mu: float, nt: int = 128) -> NoiseGrid:
    """与 λ 匹配的网格：时间区间 2λ^{s0}，空间每个 λ 至少 8 个单元"""
    if not (0.0 < lam <= 0.5):
        raise ValueError(f"λ 必须位于 (0, 1/2]，收到 {lam}")
    n = 2 * int(np.ceil(4.0 / lam))
    return NoiseGrid(nt, n, n, 2.0 * lam ** (2.0 * mu))


def noise_regularity(
    mu: float,
    lambdas: Sequence[float],
    n_samples: int = 2000,
    seed: int = 0,
    eps_ratio: float = 0.25,
    nt: int = 128,
    profile: str = "bump",
    runner: Optional[MonteCarloRunner] = None,
) -> ScalingFit:
    """E|⟨ξ_ε, φ^λ⟩|² 关于 λ 的斜率，理论值 -(2+2μ)

    ξ_ε = mollify(sample(...))，ε = eps_ratio·λ。每个实现在 regularity_grid 上生成，
    取空间间距 2λ 的全部平移 φ^λ（由空间互相关一次算出）作为样本。
    """
    s0 = 2.0 * mu
    runner = runner or MonteCarloRunner(seed, chunk_size=2, max_workers=2)
    rows: List[MomentRow] = []
    grids: List[int] = []
    for index, lam in enumerate(float(v) for v in lambdas):
        grid = regularity_grid(lam, mu, nt)
        mollifier = Mollifier(eps_ratio * lam, profile=profile, mu=mu)
        bump = space_time_bump(grid, (0.5 * grid.T, 0.0, 0.0), lam, s0)
        bump_hat = np.conj(np.fft.rfft2(bump, axes=(1, 2)))
        stride = int(round(2.0 * lam * grid.nx))
        per_realization = (grid.nx // stride) ** 2
        offset = index << 20

        def block(start, count, grid=grid, mollifier=mollifier, bump_hat=bump_hat, stride=stride, offset=offset):
            out = []
            for r in range(start, start + count):
                smooth = mollify(sample(seed, grid, offset + r), mollifier)
                spectrum = np.sum(np.fft.rfft2(smooth.values, axes=(1, 2)) * bump_hat, axis=0)
                pairings = np.fft.irfft2(spectrum, s=(grid.nx, grid.ny)) * grid.cell_volume
                out.append(pairings[::stride, ::stride].ravel())
            return np.concatenate(out)

        realizations = -(-n_samples // per_realization)
        samples = runner.run_blocks(block, realizations)[:n_samples]
        rows.append(moment_row(lam, samples))
        grids.append(grid.nx)
        logger.debug(f"噪声正则性 λ={lam:.4g}：网格 {grid.shape}，{realizations} 个实现")

    warnings = power_warnings(rows, label="噪声正则性")
    return fit_loglog(
        [r.scale for r in rows],
        [r.mean_sq for r in rows],
        target=-(2.0 + s0),
        label="noise_regularity",
        warnings=warnings,
        meta={"moments": [r.csv_row() for r in rows], "mu": mu, "eps_ratio": eps_ratio, "nt": nt,
              "grids": grids},
    )


def chaos_I2(f: np.ndarray, z: np.ndarray, cell_volume: float, normalization: str = "hermite") -> np.ndarray:
    """I₂(f) = ΔV(zᵀfz - tr f)，z 为标准正态单元变量（可批量，形状 (..., M)）

    "wick" 与 ξ⊗ξ 的 Wick 积一致，E|I₂|² = 2‖sym f‖²；"hermite" 再除以 √2。
    """
    if normalization not in CHAOS_NORMALIZATIONS:
        raise ValueError(f"未知混沌归一化：{normalization}")
    f = np.asarray(f, dtype=float)
    quadratic = np.einsum("...i,ij,...j->...", z, f, z)
    value = cell_volume * (quadratic - np.trace(f))
    if normalization == "hermite":
        value = value / np.sqrt(2.0)
    return value


def chaos_I2_estimate(
    f: np.ndarray,
    cell_volume: float,
    n_samples: int = 1000,
    seed: int = 0,
    normalization: str = "hermite",
    runner: Optional[MonteCarloRunner] = None,
) -> ChaosEstimate:
    """Monte Carlo 估计 E[I₂(f)] 与 E[I₂(f)²]；f 为网格²上的取值矩阵"""
    f = np.asarray(f, dtype=float)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"f 必须是方阵，收到形状 {f.shape}")
    if n_samples < 2:
        raise ValueError(f"样本数至少为 2，收到 {n_samples}")
    runner = runner or MonteCarloRunner(seed)

    def chunk(rng, count):
        z = rng.standard_normal((count, f.shape[0]))
        return chaos_I2(f, z, cell_volume, normalization)

    values = runner.run_sync(chunk, n_samples, stream=(2,))
    squares = values ** 2
    return ChaosEstimate(
        mean=float(np.mean(values)),
        second_moment=float(np.mean(squares)),
        stderr=float(np.std(values, ddof=1) / np.sqrt(values.size)),
        n=int(values.size),
        norm_sq=float(np.sum(f ** 2) * cell_volume ** 2),
        normalization=normalization,
    )


def random_smooth_kernel(grid: NoiseGrid, rng: np.random.Generator, terms: int = 3) -> np.ndarray:
    """网格² 上的随机光滑函数 f(z₁,z₂) = Σ_a c_a g_a(z₁)h_a(z₂)"""
    t = (np.arange(grid.nt) + 0.5) / grid.nt
    x = np.arange(grid.nx) / grid.nx
    y = np.arange(grid.ny) / grid.ny
    tt, xx, yy = np.meshgrid(t, x, y, indexing="ij")
    f = np.zeros((tt.size, tt.size))
    for _ in range(terms):
        k = rng.integers(0, 3, size=6)
        phase = rng.uniform(0.0, 2.0 * np.pi, size=2)
        g = np.cos(np.pi * k[0] * tt + 2 * np.pi * (k[1] * xx + k[2] * yy) + phase[0]).ravel()
        h = np.cos(np.pi * k[3] * tt + 2 * np.pi * (k[4] * xx + k[5] * yy) + phase[1]).ravel()
        f += rng.normal() * np.outer(g, h)
    return f
