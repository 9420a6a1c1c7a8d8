"""模型空间生成模块 - 负责 SQG 符号的生成、精确齐次度与次临界判定"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Tuple

from .api import NonTerminationError, logger
from .models.homogeneity import Homogeneity, MultiIndex, Number, as_fraction
from .models.symbol import (
    UNIT,
    XI,
    IntDeriv,
    Poly,
    Product,
    Riesz,
    Symbol,
    XiIntegral,
    collapse_single_noise,
    make_int_deriv,
    make_product,
    make_riesz,
)

XI_HOMOGENEITY = Homogeneity(-1, 1, -1)
INT_DERIV_SHIFT = Homogeneity(-1, 2, 0)
RIESZ_SHIFT = Homogeneity(0, 0, 0)

DEFAULT_MAX_DEPTH = 4
DEFAULT_MAX_SYMBOLS = 10_000

_DEFAULT = object()


def homogeneity(symbol: Symbol) -> Homogeneity:
    """按生成规则递归计算 |τ|"""
    if isinstance(symbol, XiIntegral):
        return XI_HOMOGENEITY
    if isinstance(symbol, Poly):
        return symbol.index.scaled_degree
    if isinstance(symbol, IntDeriv):
        return homogeneity(symbol.child) + INT_DERIV_SHIFT
    if isinstance(symbol, Riesz):
        return homogeneity(symbol.child) + RIESZ_SHIFT
    if isinstance(symbol, Product):
        total = Homogeneity()
        for factor in symbol.factors:
            total = total + homogeneity(factor)
        return total
    raise TypeError(f"未知符号类型: {type(symbol).__name__}")


def default_gamma() -> Homogeneity:
    """γ = 1 + 2κ - μ"""
    return Homogeneity(1, -1, 2)


@dataclass(frozen=True)
class SymbolRecord:
    """一个已生成符号及其出处"""

    symbol: Symbol
    homogeneity: Homogeneity
    level: int
    family: str
    generator_only: bool = False

    @property
    def flagged(self) -> bool:
        """含 k0>0 的多项式因子：多项式模型将其映为 0"""
        return self.symbol.has_time_polynomial

    def value(self, mu: Number, kappa: Number) -> Fraction:
        return self.homogeneity.evaluate(mu, kappa)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "symbol": self.symbol.text(),
            "homogeneity": self.homogeneity.to_dict(),
            "level": self.level,
            "family": self.family,
            "generator_only": self.generator_only,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class ModelSpace:
    """生成结果：按层级记录的 F̃_n / F̄_n 以及多项式扇区"""

    mu: Fraction
    kappa: Fraction
    gamma_cut: Optional[Fraction]
    depth: int
    records: Tuple[SymbolRecord, ...]
    diagnostics: Tuple[str, ...] = field(default_factory=tuple)

    def level(self, family: str, n: int, include_generators: bool = True) -> List[SymbolRecord]:
        return [
            r for r in self.records
            if r.family == family and r.level == n and (include_generators or not r.generator_only)
        ]

    def bar(self, n: int) -> List[SymbolRecord]:
        return self.level("bar", n)

    def tilde(self, n: int) -> List[SymbolRecord]:
        return self.level("tilde", n)

    @property
    def basis(self) -> List[SymbolRecord]:
        """T_{<γ} 的基：去重后的非生成元符号，记录最早出现的层级"""
        seen: Dict[Symbol, SymbolRecord] = {}
        for record in self.records:
            if record.generator_only:
                continue
            if record.symbol not in seen:
                seen[record.symbol] = record
        return list(seen.values())

    @property
    def symbols(self) -> List[Symbol]:
        return [r.symbol for r in self.basis]

    def contains(self, symbol: Symbol) -> bool:
        return any(r.symbol == symbol for r in self.basis)

    def value(self, record: SymbolRecord) -> Fraction:
        return record.homogeneity.evaluate(self.mu, self.kappa)

    def min_homogeneity(self) -> Tuple[Fraction, Homogeneity]:
        best = min(self.basis, key=lambda r: (self.value(r), r.symbol.key))
        return self.value(best), best.homogeneity

    def to_json(self) -> List[Dict[str, Any]]:
        return [r.to_dict() for r in self.records]


def _polynomial_indices(bound: Optional[Fraction], mu: Fraction, max_degree: int) -> List[MultiIndex]:
    """枚举 k≠0 且 |k|_s < bound 的多重指标；无截断时用 k1+k2+2k0 ≤ max_degree"""
    indices = []
    if bound is None:
        limit = max_degree
        for k0 in range(limit // 2 + 1):
            for k1 in range(limit + 1):
                for k2 in range(limit + 1):
                    if 2 * k0 + k1 + k2 <= limit:
                        indices.append(MultiIndex(k0, k1, k2))
    else:
        if bound <= 0:
            return []
        k0_max = int(bound / (2 * mu)) + 1
        s_max = int(bound) + 1
        for k0 in range(k0_max + 1):
            for k1 in range(s_max + 1):
                for k2 in range(s_max + 1):
                    index = MultiIndex(k0, k1, k2)
                    if index.scaled_degree.evaluate(mu, 0) < bound:
                        indices.append(index)
    return sorted(i for i in indices if not i.is_zero)


class _Generator:
    """执行 F̃_n / F̄_n 递推，并按 γ_cut 做精确剪枝"""

    def __init__(self, mu: Fraction, kappa: Fraction, gamma_cut: Optional[Fraction],
                 max_symbols: int, max_poly_degree: int, include_polynomials: bool):
        self.mu = mu
        self.kappa = kappa
        self.gamma_cut = gamma_cut
        self.max_symbols = max_symbols
        self.include_polynomials = include_polynomials
        self.min_bar = XI_HOMOGENEITY.evaluate(mu, kappa)
        self.min_form = XI_HOMOGENEITY.scale(2)
        poly_bound = None
        if gamma_cut is not None:
            poly_bound = gamma_cut - self.min_form.evaluate(mu, kappa)
        self.poly_indices = (
            _polynomial_indices(poly_bound, mu, max_poly_degree) if include_polynomials else []
        )
        self.count = 0

    def value(self, symbol: Symbol) -> Fraction:
        return homogeneity(symbol).evaluate(self.mu, self.kappa)

    def below_cut(self, value: Fraction) -> bool:
        return self.gamma_cut is None or value < self.gamma_cut

    def alive_as_generator(self, value: Fraction) -> bool:
        return self.gamma_cut is None or value + self.min_bar < self.gamma_cut

    def _bump(self, amount: int = 1):
        self.count += amount
        if self.count > self.max_symbols:
            raise NonTerminationError(f"符号数量超过上限 {self.max_symbols}")

    def tilde_candidates(self, previous_bar: List[Symbol], all_bar: List[Symbol]) -> List[Symbol]:
        out: List[Symbol] = []
        for tau in previous_bar:
            for i in (1, 2):
                riesz = make_riesz(i, tau)
                out.append(riesz)
                for other in all_bar:
                    out.append(make_product(riesz, other))
                for index in self.poly_indices:
                    out.append(make_product(riesz, Poly(index)))
            for index in self.poly_indices:
                out.append(make_product(tau, Poly(index)))
        unique: Dict[Symbol, None] = {}
        for symbol in out:
            if symbol is not None:
                unique.setdefault(symbol, None)
        return list(unique)

    def bar_candidates(self, tilde: List[Symbol]) -> List[Symbol]:
        unique: Dict[Symbol, None] = {}
        for tau in tilde:
            for j in (1, 2):
                symbol = make_int_deriv(j, tau)
                if symbol is not None:
                    unique.setdefault(symbol, None)
        return list(unique)


def generate(
    mu: Number,
    kappa: Number,
    depth: int,
    gamma_cut: Any = _DEFAULT,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_symbols: int = DEFAULT_MAX_SYMBOLS,
    max_poly_degree: int = 2,
    include_polynomials: bool = True,
    strict: bool = False,
) -> ModelSpace:
    """按 F̃_n = {R_i[τ], R_i[τ]τ̄, R_i[τ]X^k, τX^k}、F̄_n = {I_j[τ]} 递推生成模型空间

    gamma_cut 缺省为 γ = 1+2κ-μ；传 None 表示不截断（用于复现各层完整列表）。
    """
    mu = as_fraction(mu)
    kappa = as_fraction(kappa)
    if not (Fraction(2, 3) < mu <= 1):
        raise ValueError(f"μ 必须位于 (2/3, 1]，收到 {mu}")
    if kappa < 0:
        raise ValueError(f"κ 必须非负，收到 {kappa}")
    if depth < 0:
        raise ValueError(f"depth 必须非负，收到 {depth}")
    if depth > max_depth:
        raise NonTerminationError(f"深度 {depth} 超过上限 {max_depth}")

    if gamma_cut is _DEFAULT:
        cut: Optional[Fraction] = default_gamma().evaluate(mu, kappa)
    elif gamma_cut is None:
        cut = None
    else:
        cut = as_fraction(gamma_cut)

    gen = _Generator(mu, kappa, cut, max_symbols, max_poly_degree, include_polynomials)
    records: List[SymbolRecord] = []

    for index in [MultiIndex()] + gen.poly_indices:
        value = index.scaled_degree.evaluate(mu, kappa)
        if gen.below_cut(value):
            records.append(SymbolRecord(Poly(index), index.scaled_degree, 0, "poly"))

    bar_levels: List[List[Symbol]] = [[XI]]
    records.append(SymbolRecord(XI, XI_HOMOGENEITY, 0, "bar", not gen.below_cut(gen.value(XI))))
    gen._bump()

    def _record_level(n: int, family: str, candidates: List[Symbol]) -> List[Symbol]:
        generators = []
        for symbol in sorted(candidates, key=lambda s: (gen.value(s), s.key)):
            value = gen.value(symbol)
            if gen.below_cut(value):
                records.append(SymbolRecord(symbol, homogeneity(symbol), n, family))
                generators.append(symbol)
            elif gen.alive_as_generator(value):
                records.append(SymbolRecord(symbol, homogeneity(symbol), n, family, generator_only=True))
                generators.append(symbol)
        gen._bump(len(generators))
        return generators

    for n in range(1, depth + 1):
        all_bar = [s for level in bar_levels for s in level]
        tilde_candidates = gen.tilde_candidates(bar_levels[n - 1], all_bar)
        _record_level(n, "tilde", tilde_candidates)
        bar_levels.append(_record_level(n, "bar", gen.bar_candidates(tilde_candidates)))

    diagnostics: List[str] = []
    if depth >= 1:
        # 只有满足 |τ| + min|τ̄| < 0 的生成元还能产生负齐次符号
        known = {r.symbol for r in records}
        negative_capable = [s for level in bar_levels for s in level if gen.value(s) + gen.min_bar < 0]
        last_level = [s for s in bar_levels[depth] if gen.value(s) + gen.min_bar < 0]
        lookahead_tilde = gen.tilde_candidates(last_level, negative_capable)
        lookahead = lookahead_tilde + gen.bar_candidates(lookahead_tilde)
        fresh = [s for s in lookahead if s not in known and gen.value(s) < 0]
        if fresh:
            message = f"深度 {depth} 处仍产生 {len(fresh)} 个新的负齐次符号，生成未达到不动点"
            diagnostics.append(message)
            logger.warning(message)
            if strict:
                raise NonTerminationError(message)

    logger.debug(f"已生成模型空间：μ={mu}, κ={kappa}, depth={depth}, 共 {len(records)} 条记录")
    return ModelSpace(mu, kappa, cut, depth, tuple(records), tuple(diagnostics))


def negative_symbols(space: ModelSpace) -> List[Tuple[Symbol, Homogeneity]]:
    """F₋：按齐次度升序、规范顺序打破平局"""
    negatives = [r for r in space.basis if space.value(r) < 0]
    negatives.sort(key=lambda r: (space.value(r), r.symbol.key))
    return [(r.symbol, r.homogeneity) for r in negatives]


def shape_view(entries: Iterable[Tuple[Symbol, Homogeneity]], mode: str = "collapsed") -> List[Tuple[Symbol, Homogeneity, int]]:
    """把带指标的符号归并为形状，附带指标重数

    mode="collapsed" 折叠全部指标；mode="renormalization" 只折叠单噪声符号的指标。
    """
    grouped: Dict[Symbol, List[Any]] = {}
    order: List[Symbol] = []
    for symbol, hom in entries:
        shape = symbol.collapse() if mode == "collapsed" else collapse_single_noise(symbol)
        if shape not in grouped:
            grouped[shape] = [hom, 0]
            order.append(shape)
        grouped[shape][1] += 1
    return [(shape, grouped[shape][0], grouped[shape][1]) for shape in order]


def renormalization_view(space: ModelSpace) -> List[Tuple[Symbol, Homogeneity, int]]:
    """F₋ 的重整化视图：单噪声符号折叠指标，乘积符号逐个列出"""
    return shape_view(negative_symbols(space), mode="renormalization")


def display_level(space: ModelSpace, family: str, n: int) -> List[Tuple[Symbol, Homogeneity, int]]:
    """某一层（去掉含多项式的符号）的折叠形状列表"""
    entries = [
        (r.symbol, r.homogeneity)
        for r in space.level(family, n)
        if not r.symbol.contains_polynomial
    ]
    return shape_view(entries, mode="collapsed")


@dataclass(frozen=True)
class SubcriticalityWitness:
    subcritical: bool
    increment: Homogeneity
    value: Fraction

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcritical": self.subcritical,
            "increment": self.increment.to_dict(),
            "increment_text": str(self.increment),
            "value": str(self.value),
        }


def cycle_increment() -> Homogeneity:
    """一次生成循环的最小增量：与最小扇区符号相乘 (μ-1) 加上 I_j (2μ-1)，κ=0"""
    product_shift = Homogeneity(XI_HOMOGENEITY.const_part, XI_HOMOGENEITY.mu_coeff, 0)
    return product_shift + INT_DERIV_SHIFT


def is_subcritical(mu: Number) -> SubcriticalityWitness:
    mu = as_fraction(mu)
    if not (0 < mu <= 1):
        raise ValueError(f"μ 必须位于 (0, 1]，收到 {mu}")
    increment = cycle_increment()
    value = increment.evaluate(mu, 0)
    return SubcriticalityWitness(value > 0, increment, value)


def threshold() -> Fraction:
    """临界 μ：增量形式的零点"""
    increment = cycle_increment()
    return -increment.const_part / increment.mu_coeff


def kappa_bound(mu: Number) -> Fraction:
    """负扇区在深度增加下稳定的 κ 上界 (3μ-2)/8"""
    return cycle_increment().evaluate(as_fraction(mu), 0) / 8


__all__ = [
    "XI",
    "UNIT",
    "homogeneity",
    "generate",
    "negative_symbols",
    "shape_view",
    "renormalization_view",
    "display_level",
    "is_subcritical",
    "threshold",
    "kappa_bound",
    "cycle_increment",
    "ModelSpace",
    "SymbolRecord",
    "SubcriticalityWitness",
    "default_gamma",
    "XI_HOMOGENEITY",
    "INT_DERIV_SHIFT",
]
