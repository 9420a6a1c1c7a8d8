"""模型空间符号：带装饰的有根树

规范文本形式：
- I[Xi]             原始符号 I[Ξ]
- X^(k0,k1,k2)      多项式，零指标写作 1
- I1[...] / I2[...] 积分导数 I_j
- R1[...] / R2[...] Riesz 提升 R_i
- a*b               乘积（因子按规范全序排列）

指标为 0 表示“已折叠的指标”，仅出现在报表视图中。
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

from .homogeneity import MultiIndex


class Symbol:
    """符号基类，子类均为不可变数据类"""

    rank = 99

    @property
    def key(self) -> Tuple:
        raise NotImplementedError

    def text(self) -> str:
        raise NotImplementedError

    @property
    def noise_count(self) -> int:
        raise NotImplementedError

    def collapse(self) -> "Symbol":
        """折叠所有 Riesz / 积分指标"""
        raise NotImplementedError

    def walk(self) -> Iterable["Symbol"]:
        yield self

    @property
    def contains_polynomial(self) -> bool:
        return any(isinstance(node, Poly) and not node.index.is_zero for node in self.walk())

    @property
    def has_time_polynomial(self) -> bool:
        return any(isinstance(node, Poly) and node.index.k0 > 0 for node in self.walk())

    def __lt__(self, other: "Symbol") -> bool:
        return self.key < other.key

    def __str__(self) -> str:
        return self.text()


@dataclass(frozen=True)
class XiIntegral(Symbol):
    rank = 2

    @property
    def key(self) -> Tuple:
        return (self.rank,)

    def text(self) -> str:
        return "I[Xi]"

    @property
    def noise_count(self) -> int:
        return 1

    def collapse(self) -> Symbol:
        return self


@dataclass(frozen=True)
class Poly(Symbol):
    index: MultiIndex = MultiIndex()

    rank = 4

    @property
    def key(self) -> Tuple:
        return (self.rank, self.index.as_tuple())

    def text(self) -> str:
        if self.index.is_zero:
            return "1"
        return "X^({},{},{})".format(*self.index.as_tuple())

    @property
    def noise_count(self) -> int:
        return 0

    def collapse(self) -> Symbol:
        return self


@dataclass(frozen=True)
class IntDeriv(Symbol):
    j: int
    child: Symbol

    rank = 1

    @property
    def key(self) -> Tuple:
        return (self.rank, self.child.key, self.j)

    def text(self) -> str:
        label = f"I{self.j}" if self.j else "I"
        return f"{label}[{self.child.text()}]"

    @property
    def noise_count(self) -> int:
        return self.child.noise_count

    def collapse(self) -> Symbol:
        return IntDeriv(0, self.child.collapse())

    def walk(self) -> Iterable[Symbol]:
        yield self
        yield from self.child.walk()


@dataclass(frozen=True)
class Riesz(Symbol):
    i: int
    child: Symbol

    rank = 0

    @property
    def key(self) -> Tuple:
        return (self.rank, self.child.key, self.i)

    def text(self) -> str:
        label = f"R{self.i}" if self.i else "R"
        return f"{label}[{self.child.text()}]"

    @property
    def noise_count(self) -> int:
        return self.child.noise_count

    def collapse(self) -> Symbol:
        return Riesz(0, self.child.collapse())

    def walk(self) -> Iterable[Symbol]:
        yield self
        yield from self.child.walk()


@dataclass(frozen=True)
class Product(Symbol):
    factors: Tuple[Symbol, ...]

    rank = 3

    @property
    def key(self) -> Tuple:
        return (self.rank, tuple(f.key for f in self.factors))

    def text(self) -> str:
        return "*".join(f.text() for f in self.factors)

    @property
    def noise_count(self) -> int:
        return sum(f.noise_count for f in self.factors)

    def collapse(self) -> Symbol:
        return make_product(*(f.collapse() for f in self.factors))

    def walk(self) -> Iterable[Symbol]:
        yield self
        for factor in self.factors:
            yield from factor.walk()


XI = XiIntegral()
UNIT = Poly(MultiIndex())


def make_product(*factors: Optional[Symbol]) -> Optional[Symbol]:
    """规范乘积：展平、合并多项式因子、去掉单位元、排序；任一因子为零符号则结果为零符号"""
    flat: List[Symbol] = []
    poly_index = MultiIndex()
    for factor in factors:
        if factor is None:
            return None
        parts = factor.factors if isinstance(factor, Product) else (factor,)
        for part in parts:
            if isinstance(part, Poly):
                poly_index = poly_index + part.index
            else:
                flat.append(part)
    if not poly_index.is_zero:
        flat.append(Poly(poly_index))
    if not flat:
        return UNIT
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(sorted(flat, key=lambda s: s.key)))


def make_int_deriv(j: int, child: Optional[Symbol]) -> Optional[Symbol]:
    """I_j 作用于纯多项式得到零符号（返回 None）"""
    if child is None or isinstance(child, Poly):
        return None
    return IntDeriv(j, child)


def make_riesz(i: int, child: Symbol) -> Symbol:
    if not isinstance(child, (IntDeriv, XiIntegral)):
        raise ValueError(f"Riesz 提升只作用于 I_j[...] 或 I[Xi]，收到 {child.text()}")
    return Riesz(i, child)


def collapse_single_noise(symbol: Symbol) -> Symbol:
    """重整化视图：只折叠单噪声符号的指标，乘积符号保留 Riesz 指标"""
    if symbol.noise_count <= 1:
        return symbol.collapse()
    if isinstance(symbol, Product):
        return make_product(*(collapse_single_noise(f) if f.noise_count > 1 else f for f in symbol.factors))
    return symbol


def _split_top_level(text: str, sep: str) -> List[str]:
    parts, depth, start = [], 0, 0
    for pos, char in enumerate(text):
        if char in "[(":
            depth += 1
        elif char in "])":
            depth -= 1
        elif char == sep and depth == 0:
            parts.append(text[start:pos])
            start = pos + 1
    parts.append(text[start:])
    return parts


def parse_symbol(text: str) -> Symbol:
    """解析规范文本形式"""
    text = text.strip().replace(" ", "")
    if not text:
        raise ValueError("空的符号文本")

    factors = _split_top_level(text, "*")
    if len(factors) > 1:
        result = make_product(*(parse_symbol(part) for part in factors))
        if result is None:
            raise ValueError(f"乘积化简为零符号: {text}")
        return result

    if text == "I[Xi]":
        return XI
    if text == "1":
        return UNIT
    if text.startswith("X^(") and text.endswith(")"):
        values = [int(v) for v in text[3:-1].split(",")]
        if len(values) != 3:
            raise ValueError(f"多项式指标须为三元组: {text}")
        return Poly(MultiIndex(*values))
    if text[0] in "IR" and text.endswith("]") and "[" in text:
        head, body = text.split("[", 1)
        index = int(head[1:]) if len(head) > 1 else 0
        if index not in (0, 1, 2):
            raise ValueError(f"指标超出 {{1,2}}: {text}")
        child = parse_symbol(body[:-1])
        if head[0] == "I":
            return IntDeriv(index, child)
        return Riesz(index, child)
    raise ValueError(f"无法解析符号: {text}")
