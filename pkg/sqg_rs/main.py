"""SQG 正则结构工具包 - 命令行入口

负责：
1. 解析命令行与配置文件
2. 调度各模块完成实验
3. 写出产物与运行清单
"""

import argparse
import asyncio
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .api import ConfigError, ManifestMismatch, NumericalDiagnostic, SqgError, configure_logging, logger
from .canonical_model import (
    build_model,
    default_time_pairs,
    model_difference_mc,
    reconstruct_continuous,
    reconstruction_defect,
    renorm_constant_report,
    scaling_mc,
    solution_expansion,
    time_regularity_mc,
)
from .canonical_model import covariance_order as model_covariance_order
from .config import ExperimentConfig
from .kernels import (
    KernelSpec,
    convolution_order_fit,
    dyadic_decompose,
    heat,
    kernel_order_fit,
    mollified,
    mollified_kernel_check,
    piece_bound_fit,
    reassembly_error,
    scaling_law_check,
)
from .models.field import PeriodicField
from .models.homogeneity import MultiIndex
from .models.symbol import parse_symbol
from .noise import (
    Mollifier,
    NoiseGrid,
    chaos_I2_estimate,
    mollify,
    noise_regularity,
    random_smooth_kernel,
    sample,
)
from .repositories import ArtifactRepository, ManifestRepository
from .services.montecarlo import make_generator
from .services.testfunctions import TestFunction
from .solver import SolverConfig, eps_convergence, grid_refinement_check, initial_field, solve
from .structure import (
    cycle_increment,
    generate,
    is_subcritical,
    kappa_bound,
    negative_symbols,
    renormalization_view,
    shape_view,
    threshold,
)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

ACTIONS: Dict[str, Tuple[str, ...]] = {
    "structure": ("generate", "negatives", "threshold"),
    "kernel": ("order", "dyadic", "mollify", "convolve", "scaling-law"),
    "noise": ("sample", "regularity", "chaos"),
    "model": ("pi", "renorm-const", "scaling", "time-reg", "covariance", "reconstruct", "difference",
              "reconstruct-defect"),
    "manifest": ("verify", "compare", "rerun"),
}

SECTIONS: Dict[str, str] = {
    "structure": "structure",
    "kernel": "kernels",
    "noise": "noise",
    "model": "model",
    "solve": "solver",
    "converge": "solver",
}

# --grid NX[xNY[xNT]] 的落点：(x 键, y 键, 时间键)；y 键为 None 表示要求方形网格
GRID_KEYS: Dict[str, Tuple[str, Optional[str], Optional[str]]] = {
    "kernel": ("kernels.grid", None, None),
    "noise": ("noise.nx", "noise.ny", "noise.nt"),
    "model": ("model.model_n", None, "model.model_nt"),
    "solve": ("solver.n", None, "solver.nt"),
    "converge": ("solver.n", None, "solver.nt"),
}
HORIZON_KEYS = {"noise": "noise.T", "solve": "solver.T", "converge": "solver.T"}
SAMPLE_KEYS = {"noise": "noise.n_samples", "model": "model.n_samples"}
LAMBDA_KEYS = {"kernel": "kernels.radii", "noise": "noise.lambdas", "model": "model.lambdas"}

Artifacts = List[str]


def _parse_index(text: str) -> MultiIndex:
    try:
        values = [int(v) for v in str(text).split(",")]
    except ValueError as e:
        raise ConfigError(f"无法解析多重指标：{text}") from e
    if len(values) != 3:
        raise ConfigError(f"多重指标须为 k0,k1,k2，收到 {text}")
    return MultiIndex(*values)


def _grid_overrides(command: str, text: str) -> Dict[str, int]:
    if command not in GRID_KEYS:
        raise ConfigError(f"命令 {command} 不接受 --grid")
    try:
        sizes = [int(v) for v in str(text).lower().split("x")]
    except ValueError as e:
        raise ConfigError(f"--grid 需要 NX[xNY[xNT]]，收到 {text}") from e
    if not 1 <= len(sizes) <= 3 or min(sizes) < 1:
        raise ConfigError(f"--grid 需要 NX[xNY[xNT]]，收到 {text}")
    nx = sizes[0]
    ny = sizes[1] if len(sizes) > 1 else nx
    x_key, y_key, t_key = GRID_KEYS[command]
    overrides: Dict[str, int] = {x_key: nx}
    if y_key is not None:
        overrides[y_key] = ny
    elif ny != nx:
        raise ConfigError(f"命令 {command} 只支持方形网格，收到 {nx}x{ny}")
    if len(sizes) == 3:
        if t_key is None:
            raise ConfigError(f"命令 {command} 没有时间网格，--grid 只接受 NX")
        overrides[t_key] = sizes[2]
    return overrides


def _model_time(t: float, nt: int) -> float:
    """把 t 对齐到 T=1、nt 个单元的时间节点"""
    grid_t = round(t * nt) / nt
    if grid_t <= 0:
        raise ConfigError(f"模型时刻 t={t} 在 nt={nt} 的网格上对齐为 0")
    return grid_t


class SqgToolkit:
    """实验调度器

    架构：
    - ExperimentConfig: 配置与覆盖
    - ArtifactRepository: 产物写入
    - ManifestRepository: 运行清单
    - SqgToolkit: 命令分发与模块协调
    """

    def __init__(self, config: ExperimentConfig, out_dir: Optional[Path] = None):
        self.config = config
        self.out_dir = Path(out_dir or self._get_config("general", "out_dir", "out"))
        self.artifacts = ArtifactRepository(self.out_dir)
        self.manifests = ManifestRepository(self.out_dir)

    def _get_config(self, section: str, key: str, default: Any = None) -> Any:
        return self.config.get(section, key, default)

    @property
    def seed(self) -> int:
        return self.config.seed

    async def run_command(self, command: str, action: Optional[str] = None,
                          options: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        """执行一个子命令并写出清单，返回摘要"""
        options = options or {}
        if command == "manifest":
            return await self._cmd_manifest(action, options)
        handlers = {
            "structure": self._cmd_structure,
            "kernel": self._cmd_kernel,
            "noise": self._cmd_noise,
            "model": self._cmd_model,
            "solve": self._cmd_solve,
            "converge": self._cmd_converge,
        }
        if command not in handlers:
            raise ConfigError(f"未知命令：{command}")
        if command in ACTIONS and action not in ACTIONS[command]:
            raise ConfigError(f"命令 {command} 的子命令必须是 {list(ACTIONS[command])}，收到 {action}")

        summary, artifacts = await handlers[command](action, options)
        label = f"{command} {action}" if action else command
        manifest = await self.manifests.write(label, self.config.to_dict(), self.config.config_hash(), self.seed,
                                              artifacts)
        summary["manifest"] = {"config_hash": manifest["config_hash"], "artifacts": manifest["artifacts"]}
        logger.info(f"命令完成：{label}，写出 {len(artifacts)} 个产物")
        return summary

    # ---------- structure ----------

    async def _cmd_structure(self, action: str, options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        mu = self._get_config("structure", "mu")
        kappa = self._get_config("structure", "kappa")
        if action == "threshold":
            summary = {
                "threshold": str(threshold()),
                "increment": str(cycle_increment()),
                "mu": str(mu),
                "subcritical": is_subcritical(mu).to_dict(),
                "kappa_bound": str(kappa_bound(mu)),
            }
            await self.artifacts.write_json("threshold.json", summary)
            return summary, ["threshold.json"]

        gamma_text = str(self._get_config("structure", "gamma", "")).strip()
        kwargs: Dict[str, Any] = {
            "max_depth": int(self._get_config("structure", "max_depth")),
            "max_symbols": int(self._get_config("structure", "max_symbols")),
        }
        if gamma_text.lower() == "none":
            kwargs["gamma_cut"] = None
        elif gamma_text:
            kwargs["gamma_cut"] = Fraction(gamma_text)
        space = generate(mu, kappa, int(self._get_config("structure", "depth")), **kwargs)

        if action == "generate":
            payload = {
                "mu": str(space.mu),
                "kappa": str(space.kappa),
                "gamma": None if space.gamma_cut is None else str(space.gamma_cut),
                "records": space.to_json(),
                "basis": [r.symbol.text() for r in space.basis],
                "diagnostics": list(space.diagnostics),
            }
            await self.artifacts.write_json("structure.json", payload)
            return {"symbols": len(space.basis), "records": len(space.records)}, ["structure.json"]

        view = self._get_config("structure", "view")
        entries = negative_symbols(space)
        if view == "indexed":
            rows = [(symbol, hom, 1) for symbol, hom in entries]
        elif view == "renormalization":
            rows = renormalization_view(space)
        else:
            rows = shape_view(entries, mode=view)
        payload = [
            {"symbol": symbol.text(), "homogeneity": str(hom), "value": str(hom.evaluate(space.mu, space.kappa)),
             "multiplicity": count}
            for symbol, hom, count in rows
        ]
        await self.artifacts.write_json("negatives.json", payload)
        return {"view": view, "count": len(payload), "negatives": payload}, ["negatives.json"]

    # ---------- kernels ----------

    def _kernel_spec(self) -> KernelSpec:
        mu = float(self._get_config("kernels", "mu"))
        kind = self._get_config("kernels", "kind")
        index = int(self._get_config("kernels", "index"))
        if kind == "mollified":
            eps = float(self._get_config("noise", "eps"))
            return mollified(heat(mu), Mollifier(eps, self._get_config("noise", "profile"), mu))
        return KernelSpec(kind, mu, index=index)

    async def _cmd_kernel(self, action: str, options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        mu = float(self._get_config("kernels", "mu"))
        radii = self._get_config("kernels", "radii")
        if action == "order":
            spec = self._kernel_spec()
            fit = await asyncio.to_thread(kernel_order_fit, spec, _parse_index(self._get_config("kernels", "derivative")),
                                          radii)
            await self.artifacts.write_json("kernel_order.json", fit)
            return {"kernel": spec.label, "slope": fit.slope, "target": fit.target}, ["kernel_order.json"]

        if action == "dyadic":
            spec = heat(mu)
            n = int(self._get_config("kernels", "grid"))
            n_max = int(self._get_config("kernels", "n_max"))
            check_time = 2.0 ** (-n_max * spec.scaling.s0)
            pieces = await asyncio.to_thread(dyadic_decompose, spec, n_max, n, sample_times=[check_time])
            fit = piece_bound_fit(pieces, target=-spec.order)
            reassembly = reassembly_error(pieces, spec, check_time) if n_max >= 2 else None
            middle = np.stack([p.values[len(p.times) // 2] for p in pieces])
            payload = {
                "fit": fit.to_dict(),
                "reassembly": reassembly,
                "pieces": [{"level": p.level, "sup": p.sup(), "moment_residual": p.moment_residual,
                            "support_radius": p.support_radius} for p in pieces],
            }
            await self.artifacts.write_json("dyadic.json", payload)
            await self.artifacts.write_krn1("dyadic_pieces.krn1", middle, mu)
            summary = {"levels": len(pieces), "slope": fit.slope,
                       "reassembly_error": reassembly["max_relative_error"] if reassembly else None}
            return summary, ["dyadic.json", "dyadic_pieces.krn1"]

        if action == "mollify":
            report = await asyncio.to_thread(
                mollified_kernel_check,
                heat(mu),
                self._get_config("kernels", "eps_list"),
                float(self._get_config("kernels", "nu")),
                self._get_config("noise", "profile"),
                growth_factor=float(self._get_config("kernels", "growth_factor")),
            )
            await self.artifacts.write_json("mollified_kernel.json", report)
            return {"first_ratio": report["first_ratio"], "second_ratio": report["second_ratio"]}, [
                "mollified_kernel.json"]

        if action == "convolve":
            spec = self._kernel_spec()
            fit = await asyncio.to_thread(convolution_order_fit, spec, heat(mu), radii)
            await self.artifacts.write_json("convolution_order.json", fit)
            return {"slope": fit.slope, "target": fit.target}, ["convolution_order.json"]

        report = await asyncio.to_thread(scaling_law_check, mu, self._get_config("kernels", "times"))
        await self.artifacts.write_json("scaling_law.json", report)
        return {"max_relative_error": report["max_relative_error"]}, ["scaling_law.json"]

    # ---------- noise ----------

    def _noise_grid(self) -> NoiseGrid:
        return NoiseGrid(int(self._get_config("noise", "nt")), int(self._get_config("noise", "nx")),
                         int(self._get_config("noise", "ny")), float(self._get_config("noise", "T")))

    async def _cmd_noise(self, action: str, options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        mu = float(self._get_config("noise", "mu"))
        n_samples = int(self._get_config("noise", "n_samples"))
        if action == "sample":
            grid = self._noise_grid()
            mollifier = Mollifier(float(self._get_config("noise", "eps")), self._get_config("noise", "profile"), mu,
                                  self._get_config("noise", "scaling"))
            xi = sample(self.seed, grid)
            smooth = mollify(xi, mollifier)
            summary = {
                "grid": grid.to_dict(),
                "eps": mollifier.eps,
                "mean": float(np.mean(xi.values)),
                "variance_times_volume": float(np.var(xi.values) * grid.cell_volume),
                "mollified_mean": smooth.mean(),
                "mollifier_mass": mollifier.mass(),
            }
            await self.artifacts.write_krn1("noise.krn1", xi.values, mu)
            await self.artifacts.write_krn1("noise_mollified.krn1", smooth.values, mu)
            await self.artifacts.write_json("noise.json", summary)
            return summary, ["noise.krn1", "noise_mollified.krn1", "noise.json"]

        if action == "regularity":
            fit = await asyncio.to_thread(noise_regularity, mu, self._get_config("noise", "lambdas"), n_samples,
                                          self.seed)
            await self.artifacts.write_json("noise_regularity.json", fit)
            await self.artifacts.write_csv("noise_regularity.csv", "moments", fit.meta["moments"])
            return {"slope": fit.slope, "target": fit.target, "warnings": fit.warnings}, [
                "noise_regularity.json", "noise_regularity.csv"]

        full = self._noise_grid()
        grid = NoiseGrid(min(full.nt, 4), min(full.nx, 4), min(full.ny, 4), full.T)
        f = random_smooth_kernel(grid, make_generator(self.seed, 3))
        f = 0.5 * (f + f.T)
        estimate = await asyncio.to_thread(chaos_I2_estimate, f, grid.cell_volume, n_samples, self.seed,
                                           self._get_config("noise", "normalization"))
        await self.artifacts.write_json("chaos.json", estimate)
        return estimate.to_dict(), ["chaos.json"]

    # ---------- model ----------

    def _model_grid_model(self, t: float):
        nt = int(self._get_config("model", "model_nt"))
        n = int(self._get_config("model", "model_n"))
        mu = float(self._get_config("model", "mu"))
        t_node = _model_time(t, nt)
        grid = NoiseGrid(nt, n, n, 1.0)
        mollifier = Mollifier(float(self._get_config("model", "model_eps")), self._get_config("model", "profile"), mu)
        model = build_model(self.seed, grid, mollifier, float(self._get_config("model", "kappa")))
        return model, t_node

    def _smooth_expansion(self, model, t: float):
        smooth = initial_field(f"random:{self.seed}", model.n)
        theta = smooth.values + model.xi_integral_history()[model.time_index(t)]
        return solution_expansion(model, PeriodicField(theta), t)

    async def _cmd_model(self, action: str, options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        mu = float(self._get_config("model", "mu"))
        symbol = parse_symbol(self._get_config("model", "symbol"))
        eps = float(self._get_config("model", "eps"))
        t = float(self._get_config("model", "t"))
        lam = float(self._get_config("model", "lambda"))
        lambdas = self._get_config("model", "lambdas")
        n_samples = int(self._get_config("model", "n_samples"))
        n = int(self._get_config("model", "grid"))
        profile = self._get_config("model", "profile")

        if action == "pi":
            model, t_node = self._model_grid_model(t)
            rows = [model.pair(symbol, t_node, TestFunction(scale), self.seed).to_dict() for scale in lambdas]
            await self.artifacts.write_json("model_pi.json", rows)
            await self.artifacts.write_krn1("model_pi.krn1", model.pi(symbol, t_node).values, mu)
            return {"symbol": symbol.text(), "t": t_node, "pairings": rows}, ["model_pi.json", "model_pi.krn1"]

        if action == "renorm-const":
            report = await asyncio.to_thread(renorm_constant_report, mu, self._get_config("model", "eps_list"), t,
                                             int(self._get_config("model", "quad_nodes")), profile)
            await self.artifacts.write_json("renorm_constant.json", report)
            return {"rows": report["rows"]}, ["renorm_constant.json"]

        if action == "scaling":
            fit = await asyncio.to_thread(scaling_mc, symbol, mu, eps, lambdas, n_samples, t, (0.0, 0.0), self.seed,
                                          n, profile)
            await self.artifacts.write_json("model_scaling.json", fit)
            await self.artifacts.write_csv("model_scaling.csv", "moments", fit.meta["moments"])
            return {"slope": fit.slope, "target": fit.target, "warnings": fit.warnings}, [
                "model_scaling.json", "model_scaling.csv"]

        if action == "time-reg":
            pairs = default_time_pairs(t, lam, mu)
            fit = await asyncio.to_thread(time_regularity_mc, symbol, mu, eps, lam, pairs,
                                          float(self._get_config("model", "delta")), n_samples, (0.0, 0.0), self.seed,
                                          n, profile)
            await self.artifacts.write_json("model_time_regularity.json", fit)
            await self.artifacts.write_csv("model_time_regularity.csv", "moments", fit.meta["moments"])
            return {"slope": fit.slope, "target": fit.target}, ["model_time_regularity.json",
                                                               "model_time_regularity.csv"]

        if action == "covariance":
            fit = await asyncio.to_thread(model_covariance_order, mu, self._get_config("kernels", "radii"),
                                          int(self._get_config("model", "index")))
            await self.artifacts.write_json("covariance_order.json", fit)
            return {"slope": fit.slope, "target": fit.target, "log_mode": fit.log_mode}, ["covariance_order.json"]

        if action == "difference":
            fit = await asyncio.to_thread(model_difference_mc, symbol, mu, self._get_config("model", "eps_list"), lam,
                                          n_samples, t, (0.0, 0.0), self.seed, n, profile)
            await self.artifacts.write_json("model_difference.json", fit)
            await self.artifacts.write_csv("model_difference.csv", "moments", fit.meta["moments"])
            return {"slope": fit.slope}, ["model_difference.json", "model_difference.csv"]

        model, t_node = self._model_grid_model(t)
        expansion = self._smooth_expansion(model, t_node)
        if action == "reconstruct":
            field = reconstruct_continuous(expansion, model, t_node)
            await self.artifacts.write_krn1("reconstruction.krn1", field.values, mu)
            summary = {"t": t_node, "symbols": [s.text() for s in expansion], "l2_norm": field.l2_norm()}
            await self.artifacts.write_json("reconstruction.json", summary)
            return summary, ["reconstruction.krn1", "reconstruction.json"]

        fit = await asyncio.to_thread(reconstruction_defect, model, expansion, t_node, lambdas, 8, self.seed)
        await self.artifacts.write_json("reconstruction_defect.json", fit)
        summary = {"slope": fit.slope, "target": fit.target, "symbols": fit.meta["symbols"]}
        if "limitation" in fit.meta:
            summary["limitation"] = fit.meta["limitation"]
        return summary, ["reconstruction_defect.json"]

    # ---------- solver ----------

    def _solver_config(self) -> SolverConfig:
        values = self.config.section("solver")
        values["seed"] = self.seed
        return SolverConfig.from_dict(values)

    async def _cmd_solve(self, action: Optional[str], options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        config = self._solver_config()
        noise = None
        if config.noise:
            noise = mollify(sample(self.seed, config.grid()), config.mollifier())
        trajectory = await asyncio.to_thread(solve, config, noise, True)
        summary = trajectory.to_dict()
        if not config.noise and config.initial.startswith("mode:"):
            # 单模初值在无噪声时精确指数衰减
            k1, k2 = (int(v) for v in config.initial.split(":", 1)[1].split(","))
            rate = (2.0 * np.pi * np.hypot(k1, k2)) ** (2.0 * config.mu)
            initial = initial_field(config.initial, config.n).values
            summary["single_mode_error"] = max(
                float(np.max(np.abs(f.values - np.exp(-rate * s) * initial)))
                for s, f in zip(trajectory.times, trajectory.fields)
            )
        await self.artifacts.write_json("trajectory.json", summary)
        await self.artifacts.write_krn1("trajectory.krn1", np.stack([f.values for f in trajectory.fields]), config.mu)
        return summary, ["trajectory.json", "trajectory.krn1"]

    async def _cmd_converge(self, action: Optional[str], options: Dict[str, Any]) -> Tuple[Dict[str, Any], Artifacts]:
        config = self._solver_config()
        t_star = float(self._get_config("solver", "t_star")) or None
        result = await asyncio.to_thread(
            eps_convergence,
            config,
            self._get_config("solver", "eps_list"),
            self.seed,
            t_star,
            float(self._get_config("solver", "kappa")),
            0.0,
            self._get_config("solver", "second_profile"),
            True,
            self._get_config("norms", "scales"),
            int(self._get_config("norms", "centers")),
        )
        artifacts = ["convergence.json", "convergence.csv"]
        if options.get("refine"):
            result["refinement"] = await asyncio.to_thread(
                grid_refinement_check, config, None, float(self._get_config("solver", "refinement_tolerance")))
        await self.artifacts.write_json("convergence.json", result)
        await self.artifacts.write_csv("convergence.csv", "convergence", result["rows"])
        return {"rows": result["rows"], "decreasing": result["decreasing"]}, artifacts

    # ---------- manifest ----------

    async def _cmd_manifest(self, action: Optional[str], options: Dict[str, Any]) -> Dict[str, Any]:
        if action == "verify":
            report = self.manifests.verify()
            if report["missing"] or report["corrupt"]:
                raise ManifestMismatch(f"产物缺失 {report['missing']}，损坏 {report['corrupt']}")
            return {"verified": True}

        if action == "compare":
            other = options.get("other")
            if not other:
                raise ConfigError("manifest compare 需要 --other 指定另一输出目录")
            return self.manifests.compare(ManifestRepository(Path(other)))

        if action == "rerun":
            manifest = self.manifests.load()
            command, _, sub = manifest["command"].partition(" ")
            target = Path(options.get("other") or self.out_dir / "rerun")
            replay = SqgToolkit(ExperimentConfig(manifest["config"]), target)
            await replay.run_command(command, sub or None, options)
            replayed = ManifestRepository(target).load()
            differing = sorted(
                name for name, digest in manifest.get("artifacts", {}).items()
                if replayed.get("artifacts", {}).get(name) != digest
            )
            if differing:
                raise ManifestMismatch(f"重跑后校验和不一致：{differing}")
            return {"reproduced": True, "artifacts": sorted(manifest.get("artifacts", {}))}

        raise ConfigError(f"manifest 的子命令必须是 {list(ACTIONS['manifest'])}，收到 {action}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="分段 key=value 配置文件")
    common.add_argument("--out", help="输出目录，覆盖 general.out_dir")
    common.add_argument("--seed", type=int, help="全局随机种子")
    common.add_argument("--log-level", dest="log_level", help="日志级别")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="覆盖任意配置项，可重复")
    common.add_argument("--mu", help="当前命令所在配置段的 μ")
    common.add_argument("--kappa", help="当前命令所在配置段的 κ")
    common.add_argument("--eps", help="当前命令所在配置段的 ε")
    common.add_argument("--grid", help="NX[xNY[xNT]]，映射到当前命令的网格配置")
    common.add_argument("--T", dest="horizon", help="时间区间长度（noise.T 或 solver.T）")
    common.add_argument("--samples", help="Monte Carlo 样本数")
    common.add_argument("--lambda-list", dest="lambda_list", help="测试尺度列表，例如 0.5,0.25,0.125")
    common.add_argument("--symbol", help="model.symbol")
    common.add_argument("--noise", choices=["on", "off"], help="solver.noise")
    common.add_argument("--init", help="solver.initial，例如 mode:1,0")
    common.add_argument("--other", help="manifest compare / rerun 使用的另一输出目录")
    common.add_argument("--refine", action="store_true", help="converge 时附带网格加密检查")

    parser = argparse.ArgumentParser(prog="sqg_rs", description="随机 SQG 方程的正则结构数值工具包")
    commands = parser.add_subparsers(dest="command", required=True)
    for command, actions in ACTIONS.items():
        sub = commands.add_parser(command, parents=[common])
        sub.add_argument("action", choices=actions)
    commands.add_parser("solve", parents=[common])
    commands.add_parser("converge", parents=[common])
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """把便捷参数映射到当前命令的配置段"""
    overrides: Dict[str, Any] = {}
    section = SECTIONS.get(args.command)
    for flag in ("mu", "kappa", "eps"):
        value = getattr(args, flag)
        if value is None:
            continue
        if section is None:
            raise ConfigError(f"命令 {args.command} 不接受 --{flag}")
        overrides[f"{section}.{flag}"] = value
    if args.grid is not None:
        overrides.update(_grid_overrides(args.command, args.grid))
    for flag, value, keys in (
        ("T", args.horizon, HORIZON_KEYS),
        ("samples", args.samples, SAMPLE_KEYS),
        ("lambda-list", args.lambda_list, LAMBDA_KEYS),
    ):
        if value is None:
            continue
        if args.command not in keys:
            raise ConfigError(f"命令 {args.command} 不接受 --{flag}")
        overrides[keys[args.command]] = value
    if args.symbol is not None:
        overrides["model.symbol"] = args.symbol
    if args.noise is not None:
        overrides["solver.noise"] = args.noise
    if args.init is not None:
        overrides["solver.initial"] = args.init
    if args.seed is not None:
        overrides["general.seed"] = args.seed
    if args.log_level is not None:
        overrides["general.log_level"] = args.log_level.upper()
    for item in args.overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set 需要 SECTION.KEY=VALUE，收到 {item}")
        overrides[key.strip()] = value.strip()
    return overrides


def run(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数并执行；返回退出码"""
    args = build_parser().parse_args(argv)
    try:
        overrides = collect_overrides(args)
        if args.config:
            config = ExperimentConfig.from_file(args.config, overrides)
        else:
            config = ExperimentConfig()
            config.apply_overrides(overrides)
        configure_logging(config.get("general", "log_level", "INFO"))
        toolkit = SqgToolkit(config, Path(args.out) if args.out else None)
        summary = asyncio.run(toolkit.run_command(args.command, getattr(args, "action", None),
                                                  {"other": args.other, "refine": args.refine}))
    except ConfigError as e:
        logger.error(f"配置错误：{e}", exc_info=True)
        print(json.dumps({"error": e.error_code, "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return EXIT_CONFIG
    except NumericalDiagnostic as e:
        logger.error(f"数值诊断失败：{e}", exc_info=True)
        print(json.dumps({"error": e.error_code, "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as e:
        logger.error(f"参数错误：{e}", exc_info=True)
        print(json.dumps({"error": "invalid_argument", "message": str(e)}, ensure_ascii=False), file=sys.stderr)
        return EXIT_CONFIG
    except SqgError as e:
        logger.error(f"运行失败：{e}", exc_info=True)
        return EXIT_FAILURE

    print(json.dumps(summary, ensure_ascii=False, indent=2, default=str))
    return EXIT_OK


def main() -> None:
    sys.exit(run())
