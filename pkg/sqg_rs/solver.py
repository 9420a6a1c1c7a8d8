"""光滑噪声驱动的 SQG 方程伪谱求解器与 ε 收敛实验

∂_tθ + (-Δ)^μθ = -div(θR^⊥θ) + ξ_ε，环面 T²，指数积分器：
θ̂_{m+1} = e^{-λΔt}θ̂_m + Δt·φ₁(λΔt)(F̂_m - N̂_m)。
不加重整化抵消项：重整化解就是光滑噪声方程的温和解。
"""

import asyncio
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .api import BlowUpDetected, ConfigError, InsufficientSamplesError, logger
from .kernels import divergence_residual
from .models.field import PeriodicField
from .noise import MollifiedNoise, Mollifier, NoiseGrid, NoiseRealization, mollify, restrict, sample
from .norms import DEFAULT_SCALES, besov_norm, littlewood_paley_norm, weighted_time_norm
from .services.montecarlo import make_generator
from .services.spectral import (
    dealias_mask,
    derivative_multiplier,
    fractional_symbol,
    phi1,
    riesz_multiplier,
    wavenumbers,
)

MEAN_MODE_POLICIES = ("project", "keep")


@dataclass(frozen=True)
class SolverConfig:
    """单条轨迹的求解参数"""

    mu: float = 0.9
    eps: float = 0.125
    T: float = 0.25
    nt: int = 256
    n: int = 128
    dealias: float = 2.0 / 3.0
    seed: int = 0
    initial: str = "zero"
    mean_mode: str = "project"
    noise: bool = True
    profile: str = "bump"
    snapshots: int = 16
    blowup_alpha: float = -1.0
    blowup_cap: float = 1e8

    def __post_init__(self):
        if not (2.0 / 3.0 < self.mu <= 1.0):
            raise ConfigError(f"μ 必须位于 (2/3, 1]，收到 {self.mu}")
        if not (0.5 < self.dealias <= 1.0):
            raise ConfigError(f"去混叠比例必须位于 (1/2, 1]，收到 {self.dealias}")
        if self.mean_mode not in MEAN_MODE_POLICIES:
            raise ConfigError(f"未知零模策略：{self.mean_mode}，可选 {list(MEAN_MODE_POLICIES)}")
        if self.nt < 2 or self.n < 4 or self.T <= 0:
            raise ConfigError(f"无效的网格：nt={self.nt}，n={self.n}，T={self.T}")
        if self.snapshots < 1 or self.snapshots > self.nt:
            raise ConfigError(f"快照数必须位于 [1, nt]，收到 {self.snapshots}")

    @property
    def dt(self) -> float:
        return self.T / self.nt

    @property
    def stiffness_ratio(self) -> float:
        """Δt / Δx^{2μ}，指数积分器下只做记录"""
        return self.dt / (1.0 / self.n) ** (2.0 * self.mu)

    def grid(self) -> NoiseGrid:
        return NoiseGrid(self.nt, self.n, self.n, self.T)

    def mollifier(self, profile: Optional[str] = None) -> Mollifier:
        return Mollifier(self.eps, profile=profile or self.profile, mu=self.mu)

    def snapshot_indices(self) -> List[int]:
        return sorted({int(round(q * self.nt / self.snapshots)) for q in range(self.snapshots + 1)})

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["dt"] = self.dt
        data["stiffness_ratio"] = self.stiffness_ratio
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)


def initial_field(spec: str, n: int) -> PeriodicField:
    """初值描述：zero | mode:k1,k2（cos(2πk·x)）| random:seed（低频随机光滑场）"""
    spec = spec.strip()
    x = np.arange(n) / n
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    if spec == "zero":
        return PeriodicField(np.zeros((n, n)))
    kind, _, argument = spec.partition(":")
    if kind == "mode":
        try:
            k1, k2 = (int(v) for v in argument.split(","))
        except ValueError as e:
            raise ConfigError(f"无法解析初值模式：{spec}") from e
        return PeriodicField(np.cos(2.0 * np.pi * (k1 * x1 + k2 * x2)))
    if kind == "random":
        rng = make_generator(int(argument or 0), 40)
        values = np.zeros((n, n))
        for k1 in range(-4, 5):
            for k2 in range(0, 5):
                if (k2 == 0 and k1 <= 0) or max(abs(k1), k2) >= n // 3:
                    continue
                amplitude = rng.standard_normal(2) / (1.0 + k1 * k1 + k2 * k2)
                phase = 2.0 * np.pi * (k1 * x1 + k2 * x2)
                values += amplitude[0] * np.cos(phase) + amplitude[1] * np.sin(phase)
        return PeriodicField(values)
    raise ConfigError(f"未知初值类型：{spec}")


def _dealiased(theta: PeriodicField, fraction: float) -> np.ndarray:
    return theta.spectrum * dealias_mask(theta.n, fraction)


def _velocity(spectrum: np.ndarray, n: int):
    u1 = np.fft.ifft2(-riesz_multiplier(2, n) * spectrum, norm="forward").real
    u2 = np.fft.ifft2(riesz_multiplier(1, n) * spectrum, norm="forward").real
    return u1, u2


def nonlinearity(theta: PeriodicField, dealias: float = 2.0 / 3.0) -> PeriodicField:
    """div(θR^⊥θ) 的伪谱计算，输入与输出都按去混叠比例截断"""
    n = theta.n
    mask = dealias_mask(n, dealias)
    spectrum = _dealiased(theta, dealias)
    values = np.fft.ifft2(spectrum, norm="forward").real
    u1, u2 = _velocity(spectrum, n)
    flux1 = np.fft.fft2(values * u1, norm="forward")
    flux2 = np.fft.fft2(values * u2, norm="forward")
    divergence = derivative_multiplier(1, n) * flux1 + derivative_multiplier(2, n) * flux2
    return PeriodicField.from_spectrum(divergence * mask)


def advective_form(theta: PeriodicField, dealias: float = 2.0 / 3.0) -> PeriodicField:
    """R^⊥θ·∇θ，与 nonlinearity 相同的截断"""
    n = theta.n
    mask = dealias_mask(n, dealias)
    spectrum = _dealiased(theta, dealias)
    u1, u2 = _velocity(spectrum, n)
    d1 = np.fft.ifft2(derivative_multiplier(1, n) * spectrum, norm="forward").real
    d2 = np.fft.ifft2(derivative_multiplier(2, n) * spectrum, norm="forward").real
    return PeriodicField.from_spectrum(np.fft.fft2(u1 * d1 + u2 * d2, norm="forward") * mask)


def energy_budget(theta: PeriodicField, mu: float, dealias: float = 2.0 / 3.0) -> Dict[str, float]:
    """无噪声时 ½d/dt‖θ‖² = -‖Λ^μθ‖² - ⟨θ, N(θ)⟩，输运项应为 0"""
    coefficients = theta.spectrum
    dissipation = float(np.sum(fractional_symbol(mu, theta.n) * np.abs(coefficients) ** 2))
    transport = float(np.real(np.sum(np.conj(coefficients) * nonlinearity(theta, dealias).spectrum)))
    tendency = -dissipation - transport
    scale = max(dissipation, 1e-300)
    return {
        "tendency": tendency,
        "dissipation": dissipation,
        "transport": transport,
        "relative_residual": abs(tendency + dissipation) / scale,
    }


@dataclass
class Trajectory:
    """快照时刻上的解；blow_up_time 非空表示提前终止"""

    config: SolverConfig
    times: List[float] = field(default_factory=list)
    fields: List[PeriodicField] = field(default_factory=list)
    residuals: List[Dict[str, float]] = field(default_factory=list)
    blow_up_time: Optional[float] = None

    @property
    def completed(self) -> bool:
        return self.blow_up_time is None

    @property
    def final(self) -> PeriodicField:
        return self.fields[-1]

    def at(self, t: float) -> PeriodicField:
        """不晚于 t 的最后一个快照"""
        candidates = [q for q, s in enumerate(self.times) if s <= t + 1e-12]
        if not candidates:
            raise ValueError(f"轨迹在 t={t} 之前没有快照")
        return self.fields[candidates[-1]]

    def reaches(self, t: float) -> bool:
        return bool(self.times) and self.times[-1] >= t - 1e-12

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "times": [float(t) for t in self.times],
            "residuals": list(self.residuals),
            "blow_up_time": self.blow_up_time,
            "completed": self.completed,
        }


def _snapshot_residuals(spectrum: np.ndarray, n: int) -> Dict[str, float]:
    values = np.fft.ifft2(spectrum, norm="forward")
    u1, u2 = _velocity(spectrum, n)
    return {
        "divergence": divergence_residual(PeriodicField(u1), PeriodicField(u2)),
        "reality": float(np.max(np.abs(values.imag))),
    }


def solve(config: SolverConfig, noise: Optional[MollifiedNoise] = None, strict: bool = False) -> Trajectory:
    """指数积分器推进；噪声取分段常数，零模按策略处理

    Besov 型范数超过上限或出现非有限值时停止并记录时间；strict 时抛出 BlowUpDetected。
    """
    n = config.n
    if noise is not None and noise.grid.shape != (config.nt, n, n):
        raise ConfigError(f"噪声网格 {noise.grid.shape} 与求解网格 {(config.nt, n, n)} 不一致")
    dt = config.dt
    symbol = fractional_symbol(config.mu, n)
    decay = np.exp(-dt * symbol)
    weight = dt * phi1(dt * symbol)
    snapshots = set(config.snapshot_indices())

    spectrum = initial_field(config.initial, n).spectrum.copy()
    trajectory = Trajectory(config=config)

    def record(m: int):
        field_m = PeriodicField.from_spectrum(spectrum)
        trajectory.times.append(m * dt)
        trajectory.fields.append(field_m)
        trajectory.residuals.append(_snapshot_residuals(spectrum, n))
        return field_m

    record(0)
    for m in range(config.nt):
        theta = PeriodicField.from_spectrum(spectrum)
        tendency = -nonlinearity(theta, config.dealias).spectrum
        if noise is not None:
            forcing = np.fft.fft2(noise.values[m], norm="forward")
            if config.mean_mode == "project":
                forcing[0, 0] = 0.0
            tendency = tendency + forcing
        spectrum = decay * spectrum + weight * tendency

        if (m + 1) in snapshots:
            current = record(m + 1)
            size = littlewood_paley_norm(current, config.blowup_alpha)
            if not np.isfinite(size) or size > config.blowup_cap:
                trajectory.blow_up_time = (m + 1) * dt
                logger.warning(f"检测到爆破：t={(m + 1) * dt:.4g}，范数 {size:.3e} 超过上限 {config.blowup_cap:.1e}")
                if strict:
                    raise BlowUpDetected(f"解在 t={(m + 1) * dt:.4g} 处超过范数上限", time=(m + 1) * dt)
                break
    logger.debug(f"求解完成：μ={config.mu}，ε={config.eps}，{len(trajectory.times)} 个快照")
    return trajectory


def coupled_noise(config: SolverConfig, xi: NoiseRealization, profile: Optional[str] = None) -> MollifiedNoise:
    return mollify(xi, config.mollifier(profile))


async def _solve_all(jobs: Sequence[tuple]) -> List[Any]:
    return await asyncio.gather(*(asyncio.to_thread(solve, config, noise) for config, noise in jobs),
                                return_exceptions=True)


def solve_many(jobs: Sequence[tuple]) -> List[Trajectory]:
    """并发求解互不依赖的 (config, noise) 组合，结果按输入顺序返回"""
    try:
        asyncio.get_running_loop()
    except RuntimeError:
        results = asyncio.run(_solve_all(jobs))
    else:
        results = [solve(config, noise) for config, noise in jobs]
    for result in results:
        if isinstance(result, Exception):
            raise result
    return results


def resolved_nt(config: SolverConfig, eps: Optional[float] = None) -> int:
    """满足 ε ≥ 2·Δt^{1/s0} 的最小时间步数，从 config.nt 起按 2 倍增长"""
    eps = config.eps if eps is None else float(eps)
    exponent = config.mollifier().time_exponent
    nt = config.nt
    while 2.0 * (config.T / nt) ** (1.0 / exponent) > eps:
        nt *= 2
    return nt


def _with_resolved_nt(config: SolverConfig, eps: float) -> SolverConfig:
    nt = resolved_nt(config, eps)
    if nt != config.nt:
        logger.info(f"ε={eps:.4g} 需要更细的时间步：nt {config.nt} → {nt}")
        return replace(config, nt=nt)
    return config


def eps_convergence(
    config: SolverConfig,
    eps_list: Sequence[float],
    seed: Optional[int] = None,
    t_star: Optional[float] = None,
    kappa: float = 0.01,
    eta: float = 0.0,
    second_profile: str = "flat",
    strict: bool = True,
    scales: Sequence[float] = DEFAULT_SCALES,
    centers: int = 64,
) -> Dict[str, Any]:
    """同一白噪声实现下依次减小 ε，报告相邻解在 t* 处的 C^α 差，α = -2+2μ-2κ"""
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 2 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ConfigError(f"ε 序列必须严格递减且至少两项，收到 {eps_list}")
    seed = config.seed if seed is None else int(seed)
    t_star = 0.25 * config.T if t_star is None else float(t_star)
    alpha = -2.0 + 2.0 * config.mu - 2.0 * kappa
    config = _with_resolved_nt(config, eps_list[-1])
    grid = config.grid()
    xi = sample(seed, grid)

    configs = [replace(config, eps=eps, seed=seed) for eps in eps_list]
    jobs = [(c, coupled_noise(c, xi)) for c in configs]
    smallest = configs[-1]
    jobs.append((smallest, coupled_noise(smallest, xi, second_profile)))
    trajectories = solve_many(jobs)
    second = trajectories.pop()

    incomplete = [c.eps for c, tr in zip(configs, trajectories) if not tr.reaches(t_star)]
    if incomplete:
        earliest = min(tr.blow_up_time for tr in trajectories if tr.blow_up_time is not None)
        logger.warning(f"ε={incomplete} 的解在 t*={t_star} 之前终止")
        if strict:
            raise BlowUpDetected(f"ε={incomplete} 的解在 t*={t_star} 之前终止", time=earliest)

    rows = []
    for q in range(len(configs) - 1):
        first, following = trajectories[q], trajectories[q + 1]
        if not (first.reaches(t_star) and following.reaches(t_star)):
            continue
        difference = besov_norm(following.at(t_star) - first.at(t_star), alpha, scales, centers, seed).value
        rows.append({"eps": configs[q + 1].eps, "diff_norm": difference, "alpha": alpha, "t_star": t_star})

    finest = trajectories[-1]
    mollifier_difference = None
    if finest.reaches(t_star) and second.reaches(t_star):
        mollifier_difference = besov_norm(second.at(t_star) - finest.at(t_star), alpha, scales, centers, seed).value

    delta_bar = 0.5 * (3.0 * config.mu - 2.0 - kappa)
    weight_exponent = min(eta - 1.0 + config.mu - 2.0 * kappa, 0.0)
    try:
        weighted = weighted_time_norm(finest.times, finest.fields, delta_bar, alpha, weight_exponent,
                                      2.0 * config.mu, t_max=t_star, scales=scales,
                                      centers=centers, seed=seed).to_dict()
    except InsufficientSamplesError as e:
        logger.warning(f"加权时间范数未计算：{e}")
        weighted = None

    differences = [row["diff_norm"] for row in rows]
    return {
        "rows": rows,
        "alpha": alpha,
        "t_star": t_star,
        "decreasing": all(b < a for a, b in zip(differences, differences[1:])),
        "mollifier_difference": mollifier_difference,
        "second_profile": second_profile,
        "weighted_norm": weighted,
        "delta_bar": delta_bar,
        "incomplete": incomplete,
        "config": config.to_dict(),
    }


def _common_modes(fine: PeriodicField, coarse_n: int) -> np.ndarray:
    """细网格解在粗网格可表示模上的系数"""
    k1, k2 = wavenumbers(coarse_n)
    return fine.spectrum[k1.astype(int) % fine.n, k2.astype(int) % fine.n]


def grid_refinement_check(config: SolverConfig, n_coarse: Optional[int] = None, tolerance: float = 1e-2) -> Dict[str, Any]:
    """固定 ε，比较细网格与限制到半分辨率的粗网格上的解（共同模上的相对 L² 差）"""
    n_coarse = n_coarse or config.n // 2
    if n_coarse * 2 != config.n:
        raise ConfigError(f"粗网格必须是细网格的一半，收到 {n_coarse} 与 {config.n}")
    if config.noise:
        config = _with_resolved_nt(config, config.eps)
    xi_fine = sample(config.seed, config.grid())
    coarse_config = replace(config, n=n_coarse)
    xi_coarse = restrict(xi_fine)
    fine, coarse = solve_many([
        (config, coupled_noise(config, xi_fine) if config.noise else None),
        (coarse_config, coupled_noise(coarse_config, xi_coarse) if config.noise else None),
    ])
    mask = dealias_mask(n_coarse, config.dealias)
    fine_modes = _common_modes(fine.final, n_coarse) * mask
    coarse_modes = coarse.final.spectrum * mask
    scale = max(float(np.sqrt(np.sum(np.abs(fine_modes) ** 2))), 1e-300)
    difference = float(np.sqrt(np.sum(np.abs(fine_modes - coarse_modes) ** 2))) / scale
    return {"n_fine": config.n, "n_coarse": n_coarse, "relative_difference": difference,
            "tolerance": tolerance, "passed": difference < tolerance}
