"""命令行入口与 SqgToolkit 调度测试"""

import json

import pytest

from sqg_rs.api import BlowUpDetected, ConfigError, ManifestMismatch, SqgError
from sqg_rs.config import ExperimentConfig
from sqg_rs.main import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_NUMERICAL,
    EXIT_OK,
    SqgToolkit,
    build_parser,
    collect_overrides,
    run,
)

SMALL_SOLVE = [
    "--noise", "off", "--init", "mode:1,0",
    "--set", "solver.n=16", "--set", "solver.nt=16", "--set", "solver.T=0.1", "--set", "solver.snapshots=4",
]
SMALL_NOISE = ["--set", "noise.nt=16", "--set", "noise.nx=16", "--set", "noise.ny=16", "--eps", "0.5"]


def _summary(capsys) -> dict:
    return json.loads(capsys.readouterr().out)


class TestOverrides:
    def test_shorthand_targets_command_section(self):
        args = build_parser().parse_args(["model", "scaling", "--mu", "4/5", "--symbol", "I[Xi]", "--seed", "3"])
        assert collect_overrides(args) == {"model.mu": "4/5", "model.symbol": "I[Xi]", "general.seed": 3}

    def test_manifest_rejects_mu(self):
        args = build_parser().parse_args(["manifest", "verify", "--mu", "9/10"])
        with pytest.raises(ConfigError):
            collect_overrides(args)

    def test_grid_maps_to_noise_cells(self):
        args = build_parser().parse_args(["noise", "sample", "--grid", "16x8x32", "--T", "0.5"])
        assert collect_overrides(args) == {"noise.nx": 16, "noise.ny": 8, "noise.nt": 32, "noise.T": "0.5"}

    def test_grid_maps_to_square_solver(self):
        args = build_parser().parse_args(["solve", "--grid", "32x32x128"])
        assert collect_overrides(args) == {"solver.n": 32, "solver.nt": 128}

    @pytest.mark.parametrize("grid", ["32x16", "axb", "0", "1x2x3x4"])
    def test_grid_rejected(self, grid):
        args = build_parser().parse_args(["solve", "--grid", grid])
        with pytest.raises(ConfigError):
            collect_overrides(args)

    def test_samples_and_lambdas(self):
        args = build_parser().parse_args(["model", "scaling", "--samples", "500", "--lambda-list", "0.5,0.25"])
        assert collect_overrides(args) == {"model.n_samples": "500", "model.lambdas": "0.5,0.25"}

    def test_flag_outside_its_commands(self):
        args = build_parser().parse_args(["structure", "generate", "--samples", "10"])
        with pytest.raises(ConfigError):
            collect_overrides(args)

    def test_set_requires_equals(self):
        args = build_parser().parse_args(["solve", "--set", "solver.n"])
        with pytest.raises(ConfigError):
            collect_overrides(args)


class TestCli:
    def test_structure_negatives(self, out_dir, capsys):
        code = run(["structure", "negatives", "--mu", "9/10", "--kappa", "1/100", "--out", str(out_dir)])
        assert code == EXIT_OK
        summary = _summary(capsys)
        assert summary["count"] == 4
        assert (out_dir / "negatives.json").exists()
        assert (out_dir / "manifest.json").exists()

    def test_threshold(self, out_dir, capsys):
        assert run(["structure", "threshold", "--out", str(out_dir)]) == EXIT_OK
        summary = _summary(capsys)
        assert summary["threshold"] == "2/3"
        assert summary["kappa_bound"] == "7/80"

    def test_unknown_key_exits_with_config_code(self, out_dir):
        assert run(["structure", "generate", "--set", "structure.bogus=1", "--out", str(out_dir)]) == EXIT_CONFIG

    def test_depth_cap_exits_with_numerical_code(self, out_dir):
        code = run(["structure", "generate", "--set", "structure.depth=5", "--out", str(out_dir)])
        assert code == EXIT_NUMERICAL

    def test_decimal_mu_accepted(self, out_dir, capsys):
        assert run(["structure", "negatives", "--mu", "0.9", "--out", str(out_dir)]) == EXIT_OK
        assert _summary(capsys)["count"] == 4

    def test_solve_single_mode(self, out_dir, capsys):
        assert run(["solve", *SMALL_SOLVE, "--out", str(out_dir)]) == EXIT_OK
        summary = _summary(capsys)
        assert summary["completed"]
        assert summary["single_mode_error"] < 1e-8
        header = (out_dir / "trajectory.krn1").read_bytes().split(b"\n", 1)[0]
        assert header == b"KRN1 5 16 16 0.9"

    def test_invalid_solver_parameters(self, out_dir):
        assert run(["solve", *SMALL_SOLVE, "--mu", "0.5", "--out", str(out_dir)]) == EXIT_CONFIG

    def test_noise_sample(self, out_dir, capsys):
        assert run(["noise", "sample", *SMALL_NOISE, "--out", str(out_dir)]) == EXIT_OK
        summary = _summary(capsys)
        assert summary["mollifier_mass"] == pytest.approx(1.0, abs=1e-6)
        assert (out_dir / "noise_mollified.krn1").exists()

    def test_under_resolved_mollifier(self, out_dir):
        code = run(["noise", "sample", *SMALL_NOISE[:-2], "--eps", "0.05", "--out", str(out_dir)])
        assert code == EXIT_NUMERICAL

    def test_verify_detects_corruption(self, out_dir, capsys):
        assert run(["structure", "negatives", "--out", str(out_dir)]) == EXIT_OK
        assert run(["manifest", "verify", "--out", str(out_dir)]) == EXIT_OK
        (out_dir / "negatives.json").write_text("[]", encoding="utf-8")
        assert run(["manifest", "verify", "--out", str(out_dir)]) == EXIT_NUMERICAL

    def test_verify_without_manifest(self, out_dir):
        assert run(["manifest", "verify", "--out", str(out_dir)]) == EXIT_NUMERICAL

    def test_blow_up_exits_with_numerical_code(self, out_dir, mocker):
        mocker.patch("sqg_rs.main.solve", side_effect=BlowUpDetected("超过上限", time=0.05))
        assert run(["solve", *SMALL_SOLVE, "--out", str(out_dir)]) == EXIT_NUMERICAL

    def test_unexpected_toolkit_error(self, out_dir, mocker):
        generate = mocker.patch("sqg_rs.main.generate", side_effect=SqgError("boom"))
        assert run(["structure", "generate", "--out", str(out_dir)]) == EXIT_FAILURE
        generate.assert_called_once()


class TestToolkit:
    @staticmethod
    def _toolkit(path, **overrides) -> SqgToolkit:
        config = ExperimentConfig()
        config.apply_overrides(overrides)
        return SqgToolkit(config, path)

    async def test_manifest_records_artifacts(self, out_dir):
        toolkit = self._toolkit(out_dir)
        summary = await toolkit.run_command("structure", "generate")
        assert set(summary["manifest"]["artifacts"]) == {"structure.json"}
        assert toolkit.manifests.load()["command"] == "structure generate"

    async def test_rejects_unknown_action(self, out_dir):
        with pytest.raises(ConfigError):
            await self._toolkit(out_dir).run_command("structure", "plot")

    async def test_compare_runs(self, tmp_path):
        first = self._toolkit(tmp_path / "a")
        second = self._toolkit(tmp_path / "b", **{"structure.mu": "4/5"})
        await first.run_command("structure", "negatives")
        await second.run_command("structure", "negatives")
        report = await first.run_command("manifest", "compare", {"other": str(tmp_path / "b")})
        assert not report["identical"]
        assert report["config_diff"]["structure.mu"] == ["9/10", "4/5"]
        same = await first.run_command("manifest", "compare", {"other": str(tmp_path / "a")})
        assert same["identical"]

    async def test_compare_requires_other(self, out_dir):
        with pytest.raises(ConfigError):
            await self._toolkit(out_dir).run_command("manifest", "compare", {})

    async def test_rerun_reproduces(self, tmp_path):
        toolkit = self._toolkit(tmp_path / "a", **{"general.seed": 4})
        await toolkit.run_command("noise", "sample", {})
        result = await toolkit.run_command("manifest", "rerun", {"other": str(tmp_path / "b")})
        assert result["reproduced"]
        assert "noise.krn1" in result["artifacts"]

    async def test_verify_raises_on_missing_artifact(self, out_dir):
        toolkit = self._toolkit(out_dir)
        await toolkit.run_command("structure", "threshold")
        (out_dir / "threshold.json").unlink()
        with pytest.raises(ManifestMismatch):
            await toolkit.run_command("manifest", "verify")

    async def test_model_reconstruct(self, out_dir):
        toolkit = self._toolkit(out_dir, **{"model.model_nt": "16", "model.model_n": "16", "model.model_eps": "0.5"})
        summary = await toolkit.run_command("model", "reconstruct")
        assert summary["t"] == pytest.approx(0.5)
        assert summary["l2_norm"] > 0
        assert "I[Xi]" in summary["symbols"]
