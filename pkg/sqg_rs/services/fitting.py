"""对数-对数拟合"""

from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from scipy import stats

from ..api import InsufficientSamplesError, logger
from ..models.records import ScalingFit


def fit_loglog(
    abscissae: Sequence[float],
    ordinates: Sequence[float],
    target: Optional[float] = None,
    label: str = "",
    log_mode: bool = False,
    meta: Optional[Dict[str, Any]] = None,
    warnings: Optional[Iterable[str]] = None,
) -> ScalingFit:
    """拟合 log|y| 关于 log x 的斜率

    非有限值或零值作为排除项记录在结果中，不会被静默丢弃。
    """
    points: List = []
    excluded: List[Dict[str, Any]] = []
    for x, y in zip(abscissae, ordinates):
        x = float(x)
        y = float(y)
        if not np.isfinite(y) or not np.isfinite(x) or x <= 0.0:
            excluded.append({"x": x, "y": repr(y), "reason": "non_finite"})
            continue
        if abs(y) == 0.0:
            excluded.append({"x": x, "y": y, "reason": "zero"})
            continue
        points.append((float(np.log(x)), float(np.log(abs(y)))))

    if excluded:
        logger.warning(f"拟合 {label or '(未命名)'} 排除了 {len(excluded)} 个采样点")

    if len(points) < 2:
        raise InsufficientSamplesError(f"拟合 {label} 的有效点不足：{len(points)} 个")

    log_x = np.array([p[0] for p in points])
    log_y = np.array([p[1] for p in points])
    if np.ptp(log_x) == 0.0:
        raise InsufficientSamplesError(f"拟合 {label} 的横坐标全部相同")

    result = stats.linregress(log_x, log_y)
    residuals = log_y - (result.intercept + result.slope * log_x)

    return ScalingFit(
        points=points,
        slope=float(result.slope),
        intercept=float(result.intercept),
        max_residual=float(np.max(np.abs(residuals))),
        target=None if target is None else float(target),
        excluded=excluded,
        warnings=list(warnings or []),
        log_mode=log_mode,
        meta=dict(meta or {}),
    )
