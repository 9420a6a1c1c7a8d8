"""齐次度与多重指标模型（精确有理数运算）"""

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Any, Dict, Union

Number = Union[int, float, Fraction]


def as_fraction(value: Any) -> Fraction:
    """将 int / Fraction / "9/10" / "0.9" 转为 Fraction；float 按十进制表示转换"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


@dataclass(frozen=True)
class Homogeneity:
    """线性形式 const_part + mu_coeff·μ + kappa_coeff·κ"""

    const_part: Fraction = Fraction(0)
    mu_coeff: Fraction = Fraction(0)
    kappa_coeff: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "const_part", as_fraction(self.const_part))
        object.__setattr__(self, "mu_coeff", as_fraction(self.mu_coeff))
        object.__setattr__(self, "kappa_coeff", as_fraction(self.kappa_coeff))

    def __add__(self, other: "Homogeneity") -> "Homogeneity":
        return Homogeneity(
            self.const_part + other.const_part,
            self.mu_coeff + other.mu_coeff,
            self.kappa_coeff + other.kappa_coeff,
        )

    def __neg__(self) -> "Homogeneity":
        return Homogeneity(-self.const_part, -self.mu_coeff, -self.kappa_coeff)

    def __sub__(self, other: "Homogeneity") -> "Homogeneity":
        return self + (-other)

    def scale(self, factor: int) -> "Homogeneity":
        return Homogeneity(self.const_part * factor, self.mu_coeff * factor, self.kappa_coeff * factor)

    def evaluate(self, mu: Number, kappa: Number = 0) -> Union[Fraction, float]:
        """有理参数下精确求值；任一参数为浮点时退化为浮点"""
        if isinstance(mu, float) or isinstance(kappa, float):
            return float(self.const_part) + float(self.mu_coeff) * float(mu) + float(self.kappa_coeff) * float(kappa)
        return self.const_part + self.mu_coeff * as_fraction(mu) + self.kappa_coeff * as_fraction(kappa)

    @property
    def is_zero(self) -> bool:
        return self.const_part == 0 and self.mu_coeff == 0 and self.kappa_coeff == 0

    @property
    def sort_key(self):
        return (self.const_part, self.mu_coeff, self.kappa_coeff)

    def __str__(self) -> str:
        parts = []
        for coeff, name in ((self.const_part, ""), (self.kappa_coeff, "κ"), (self.mu_coeff, "μ")):
            if coeff == 0:
                continue
            sign = "-" if coeff < 0 else "+"
            magnitude = abs(coeff)
            if name and magnitude == 1:
                text = name
            else:
                text = f"{magnitude}{name}"
            parts.append((sign, text))
        if not parts:
            return "0"
        head_sign, head_text = parts[0]
        out = ("-" if head_sign == "-" else "") + head_text
        for sign, text in parts[1:]:
            out += sign + text
        return out

    def to_dict(self) -> Dict[str, str]:
        return {"c": str(self.const_part), "mu": str(self.mu_coeff), "kappa": str(self.kappa_coeff)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Homogeneity":
        return cls(data.get("c", 0), data.get("mu", 0), data.get("kappa", 0))


ZERO = Homogeneity()


@dataclass(frozen=True, order=True)
class MultiIndex:
    """时间指数 k0 与空间指数 k1, k2"""

    k0: int = 0
    k1: int = 0
    k2: int = 0

    def __post_init__(self):
        if min(self.k0, self.k1, self.k2) < 0:
            raise ValueError(f"多重指标必须非负: {(self.k0, self.k1, self.k2)}")

    @property
    def scaled_degree(self) -> Homogeneity:
        """抛物尺度下的 |k|_s = 2μ·k0 + k1 + k2"""
        return Homogeneity(self.k1 + self.k2, 2 * self.k0, 0)

    @property
    def spatial_degree(self) -> int:
        return self.k1 + self.k2

    @property
    def is_zero(self) -> bool:
        return self.k0 == 0 and self.k1 == 0 and self.k2 == 0

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        return MultiIndex(self.k0 + other.k0, self.k1 + other.k1, self.k2 + other.k2)

    def as_tuple(self):
        return (self.k0, self.k1, self.k2)
