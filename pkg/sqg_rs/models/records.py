"""验证结果记录"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple


@dataclass(frozen=True)
class ScalingFit:
    """对数-对数最小二乘拟合记录，残差始终公开"""

    points: List[Tuple[float, float]]
    slope: float
    intercept: float
    max_residual: float
    target: Optional[float] = None
    excluded: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
    log_mode: bool = False
    meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "slope": float(self.slope),
            "intercept": float(self.intercept),
            "max_residual": float(self.max_residual),
            "points": [[float(a), float(b)] for a, b in self.points],
            "target": self.target,
            "excluded": list(self.excluded),
            "warnings": list(self.warnings),
            "log_mode": bool(self.log_mode),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ScalingFit":
        return cls(
            points=[(float(a), float(b)) for a, b in data.get("points", [])],
            slope=float(data["slope"]),
            intercept=float(data["intercept"]),
            max_residual=float(data.get("max_residual", 0.0)),
            target=data.get("target"),
            excluded=list(data.get("excluded", [])),
            warnings=list(data.get("warnings", [])),
            log_mode=bool(data.get("log_mode", False)),
            meta=dict(data.get("meta", {})),
        )


@dataclass(frozen=True)
class MomentRow:
    """单个尺度上的 Monte Carlo 二阶矩"""

    scale: float
    mean_sq: float
    stderr: float
    n: int
    mean: float = 0.0

    def csv_row(self) -> List[Any]:
        return [repr(float(self.scale)), repr(float(self.mean_sq)), repr(float(self.stderr)), int(self.n)]


@dataclass(frozen=True)
class NormEstimate:
    """负正则性 Hölder 范数的离散估计"""

    alpha: float
    value: float
    per_scale: List[Tuple[float, float]]
    excluded_scales: List[float] = field(default_factory=list)
    meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": float(self.alpha),
            "value": float(self.value),
            "per_scale": [[float(lam), float(sup)] for lam, sup in self.per_scale],
            "excluded_scales": [float(v) for v in self.excluded_scales],
            "meta": dict(self.meta),
        }


@dataclass(frozen=True)
class RenormalizationConstant:
    """C^i_ε = (R_iK_ε, K_ε) 在 (0,t)×T² 上的内积"""

    i: int
    eps: float
    value: float
    error_estimate: float
    meta: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "i": int(self.i),
            "eps": float(self.eps),
            "value": float(self.value),
            "error_estimate": float(self.error_estimate),
            "meta": dict(self.meta),
        }


@dataclass(frozen=True)
class ModelEvaluation:
    """模型对测试函数的一次配对"""

    symbol: str
    t: float
    x: Tuple[float, float]
    scale: float
    value: float
    eps: float
    seed: int
    test_mass: float = 1.0
    renormalized: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "symbol": self.symbol,
            "t": float(self.t),
            "x": [float(v) for v in self.x],
            "lambda": float(self.scale),
            "value": float(self.value),
            "eps": float(self.eps),
            "seed": int(self.seed),
            "test_mass": float(self.test_mass),
            "renormalized": bool(self.renormalized),
        }


@dataclass(frozen=True)
class ChaosEstimate:
    """二阶 Wiener 混沌的 Monte Carlo 统计"""

    mean: float
    second_moment: float
    stderr: float
    n: int
    norm_sq: float
    normalization: str

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mean": float(self.mean),
            "second_moment": float(self.second_moment),
            "stderr": float(self.stderr),
            "n": int(self.n),
            "norm_sq": float(self.norm_sq),
            "normalization": self.normalization,
        }


@dataclass(frozen=True)
class IsometryRow:
    """一对测试函数上 Ê[⟨ξ,φ⟩⟨ξ,ψ⟩] 与 (φ,ψ)_{L²} 的比较"""

    exact: float
    estimate: float
    stderr: float
    norm_product: float
    n: int

    @property
    def z_score(self) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.estimate == self.exact else float("inf")
        return (self.estimate - self.exact) / self.stderr

    @property
    def relative_error(self) -> float:
        return abs(self.estimate - self.exact) / max(self.norm_product, 1e-300)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "exact": float(self.exact),
            "estimate": float(self.estimate),
            "stderr": float(self.stderr),
            "z_score": float(self.z_score),
            "relative_error": float(self.relative_error),
            "n": int(self.n),
        }
