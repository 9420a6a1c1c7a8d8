"""工具包公共接口：日志记录器与异常体系"""

import logging

logger = logging.getLogger("sqg_rs")
logger.addHandler(logging.NullHandler())


class SqgError(Exception):
    """工具包异常基类，携带字符串错误码"""

    error_code = "error"

    def __init__(self, message: str, error_code: str = ""):
        super().__init__(message)
        if error_code:
            self.error_code = error_code


class ConfigError(SqgError, ValueError):
    """配置错误（未知键、非法取值、网格不合法等）"""

    error_code = "config_error"


class NumericalDiagnostic(SqgError, RuntimeError):
    """数值诊断失败的基类"""

    error_code = "numerical_diagnostic"


class ResolutionError(NumericalDiagnostic):
    """网格分辨率不足"""

    error_code = "under_resolved"


class QuadratureError(NumericalDiagnostic):
    """求积在两级加密之间未收敛"""

    error_code = "quadrature"


class NonTerminationError(NumericalDiagnostic):
    """符号生成在深度上限处仍产生新的负齐次符号"""

    error_code = "non_termination"


class BlowUpDetected(NumericalDiagnostic):
    """求解过程中范数超过上限"""

    error_code = "blow_up"

    def __init__(self, message: str, time: float = float("nan")):
        super().__init__(message)
        self.time = time


class LemmaViolation(NumericalDiagnostic):
    """光滑化核的界在 ε 序列上不一致"""

    error_code = "lemma_violation"


class BasisMismatchError(NumericalDiagnostic):
    """模型分布引用了模型空间之外的符号"""

    error_code = "basis_mismatch"


class InsufficientSamplesError(NumericalDiagnostic):
    """时间采样点不足"""

    error_code = "insufficient_samples"


class ManifestMismatch(NumericalDiagnostic):
    """清单与产物或另一清单不一致"""

    error_code = "manifest_mismatch"


def configure_logging(level: str = "INFO") -> None:
    """为命令行运行挂接一个控制台输出"""
    if not any(isinstance(h, logging.StreamHandler) for h in logger.handlers):
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("[%(asctime)s] [%(levelname)s] %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(str(level).upper())


__all__ = [
    "logger",
    "configure_logging",
    "SqgError",
    "ConfigError",
    "NumericalDiagnostic",
    "ResolutionError",
    "QuadratureError",
    "NonTerminationError",
    "BlowUpDetected",
    "LemmaViolation",
    "BasisMismatchError",
    "InsufficientSamplesError",
    "ManifestMismatch",
]
