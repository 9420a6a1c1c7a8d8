"""负正则性 Hölder–Besov 范数与加权时间范数的离散估计"""

from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .api import InsufficientSamplesError, logger
from .models.field import PeriodicField
from .models.records import NormEstimate
from .services.montecarlo import make_generator
from .services.spectral import wavenumbers
from .services.testfunctions import derivative_family

DEFAULT_SCALES: Tuple[float, ...] = tuple(2.0 ** -j for j in range(1, 7))


def besov_norm(
    field: PeriodicField,
    alpha: float,
    scales: Sequence[float] = DEFAULT_SCALES,
    centers: int = 64,
    seed: int = 0,
    order: int = 2,
) -> NormEstimate:
    """‖f‖_{C^α} ≈ max_λ max_{x,ψ} λ^{-α}|⟨f, ψ^λ_x⟩|

    中心 x 取 centers 个由 seed 固定的网格点，ψ 取凸包及其至多 order 阶导数；
    λ·N < 4 的尺度网格无法分辨，排除并给出警告。
    """
    if alpha >= order:
        raise ValueError(f"α 必须小于测试函数族阶数 {order}，收到 α={alpha}")
    n = field.n
    k1, k2 = wavenumbers(n)
    rng = make_generator(seed, 30)
    points = rng.integers(0, n, size=(centers, 2)) / n
    # 每个中心的平移相位 e^{-2πik·x}
    phases = np.exp(-2j * np.pi * (points[:, 0, None, None] * k1 + points[:, 1, None, None] * k2))
    coefficients = field.spectrum

    per_scale = []
    excluded = []
    for lam in scales:
        if lam * n < 4:
            excluded.append(float(lam))
            continue
        worst = 0.0
        for member in derivative_family(lam, order):
            # ⟨f, ψ_x⟩ = Σ f̂·conj(ψ̂_0)·e^{2πik·x}
            weighted = coefficients * np.conj(member.spectrum(n))
            values = np.real(np.einsum("ij,pij->p", weighted, np.conj(phases)))
            worst = max(worst, float(np.max(np.abs(values))))
        per_scale.append((float(lam), worst * lam ** (-alpha)))

    if excluded:
        logger.warning(f"网格 N={n} 无法分辨尺度 {excluded}，已从范数中排除")
    if not per_scale:
        raise InsufficientSamplesError(f"网格 N={n} 上没有可分辨的尺度")
    value = max(sup for _, sup in per_scale)
    return NormEstimate(alpha=float(alpha), value=value, per_scale=per_scale, excluded_scales=excluded,
                        meta={"centers": int(centers), "seed": int(seed), "order": int(order), "grid": int(n)})


def parabolic_time(t: float, s0: float) -> float:
    """|t|₀ = |t|^{1/s0} ∧ 1"""
    return min(abs(t) ** (1.0 / s0), 1.0)


def _time_pairs(count: int) -> List[Tuple[int, int]]:
    """(i, i + 2^m)：每个时刻与二进间隔后的时刻配对"""
    pairs = []
    for i in range(count):
        step = 1
        while i + step < count:
            pairs.append((i, i + step))
            step *= 2
    return pairs


def weighted_time_norm(
    times: Sequence[float],
    trajectory: Sequence[PeriodicField],
    delta: float,
    alpha: float,
    eta: float,
    s0: float,
    t_max: Optional[float] = None,
    scales: Sequence[float] = DEFAULT_SCALES,
    centers: int = 64,
    seed: int = 0,
) -> NormEstimate:
    """‖θ‖_{C^{δ,α}_{η;T}} 的离散估计

    逐点项 |t|₀^{-η}‖θ(t)‖_{C^α}；增量项 ‖θ(t)-θ(s)‖_{C^{α-δ}} / (|t-s|^{δ/s0}|t,s|₀^{η-δ})，
    |t,s|₀ = |t|₀ ∧ |s|₀，时刻对取二进间隔。
    """
    if delta <= 0:
        raise ValueError(f"δ 必须为正，收到 {delta}")
    if eta > 0:
        raise ValueError(f"η 必须非正，收到 {eta}")
    if len(times) != len(trajectory):
        raise ValueError(f"时间与轨迹长度不一致：{len(times)} 与 {len(trajectory)}")
    selected = [(float(t), f) for t, f in zip(times, trajectory)
                if t > 0 and (t_max is None or t <= t_max + 1e-12)]
    if len(selected) < 8:
        raise InsufficientSamplesError(f"加权时间范数至少需要 (0,T] 内 8 个时刻，实际 {len(selected)}")

    per_scale: Dict[float, float] = {}
    pointwise = 0.0
    for t, field in selected:
        estimate = besov_norm(field, alpha, scales, centers, seed)
        weight = parabolic_time(t, s0) ** (-eta)
        pointwise = max(pointwise, weight * estimate.value)
        for lam, sup in estimate.per_scale:
            per_scale[lam] = max(per_scale.get(lam, 0.0), weight * sup)

    increment = 0.0
    for i, j in _time_pairs(len(selected)):
        (s, first), (t, second) = selected[i], selected[j]
        difference = besov_norm(second - first, alpha - delta, scales, centers, seed).value
        weight = abs(t - s) ** (delta / s0) * min(parabolic_time(t, s0), parabolic_time(s, s0)) ** (eta - delta)
        increment = max(increment, difference / weight)

    logger.debug(f"加权时间范数：逐点项 {pointwise:.4g}，增量项 {increment:.4g}")
    return NormEstimate(
        alpha=float(alpha),
        value=max(pointwise, increment),
        per_scale=sorted(per_scale.items(), reverse=True),
        meta={"delta": float(delta), "eta": float(eta), "s0": float(s0), "pointwise": pointwise,
              "increment": increment, "times": len(selected)},
    )


def littlewood_paley_norm(field: PeriodicField, alpha: float) -> float:
    """max_j 2^{jα}‖Δ_jf‖_∞，Δ_j 为二进环 2^{j-1} ≤ |k|∞ < 2^j 上的截断（j=0 为零模）"""
    n = field.n
    k1, k2 = wavenumbers(n)
    level = np.maximum(np.abs(k1), np.abs(k2))
    coefficients = field.spectrum
    best = abs(float(np.real(coefficients[0, 0])))
    j = 1
    while 2 ** (j - 1) <= n // 2:
        block = np.where((level >= 2 ** (j - 1)) & (level < 2 ** j), coefficients, 0.0)
        sup = float(np.max(np.abs(np.fft.ifft2(block, norm="forward").real)))
        best = max(best, 2.0 ** (j * alpha) * sup)
        j += 1
    return best
