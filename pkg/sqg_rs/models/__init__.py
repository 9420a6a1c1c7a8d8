"""领域模型导出"""

from .field import PeriodicField
from .homogeneity import ZERO, Homogeneity, MultiIndex, as_fraction
from .records import (
    ChaosEstimate,
    IsometryRow,
    ModelEvaluation,
    MomentRow,
    NormEstimate,
    RenormalizationConstant,
    ScalingFit,
)
from .symbol import (
    UNIT,
    XI,
    IntDeriv,
    Poly,
    Product,
    Riesz,
    Symbol,
    XiIntegral,
    make_int_deriv,
    make_product,
    make_riesz,
    parse_symbol,
)

__all__ = [
    "PeriodicField",
    "Homogeneity",
    "MultiIndex",
    "ZERO",
    "as_fraction",
    "ScalingFit",
    "MomentRow",
    "NormEstimate",
    "RenormalizationConstant",
    "ModelEvaluation",
    "ChaosEstimate",
    "IsometryRow",
    "Symbol",
    "XiIntegral",
    "Poly",
    "IntDeriv",
    "Riesz",
    "Product",
    "XI",
    "UNIT",
    "make_product",
    "make_int_deriv",
    "make_riesz",
    "parse_symbol",
]
