"""SQG 伪谱求解器与 ε 收敛实验测试"""

from dataclasses import replace

import numpy as np
import pytest

from sqg_rs.api import BlowUpDetected, ConfigError, ResolutionError
from sqg_rs.config import ExperimentConfig
from sqg_rs.models.field import PeriodicField
from sqg_rs.noise import NoiseGrid, sample
from sqg_rs.solver import (
    SolverConfig,
    advective_form,
    coupled_noise,
    energy_budget,
    eps_convergence,
    grid_refinement_check,
    initial_field,
    nonlinearity,
    resolved_nt,
    solve,
)


def _decaying_mode(**overrides) -> SolverConfig:
    values = dict(mu=0.9, T=0.1, nt=16, n=16, noise=False, initial="mode:1,0", snapshots=4)
    values.update(overrides)
    return SolverConfig(**values)


class TestSolverConfig:
    @pytest.mark.parametrize("mu", [0.6, 2.0 / 3.0, 1.2])
    def test_rejects_mu_outside_range(self, mu):
        with pytest.raises(ConfigError):
            SolverConfig(mu=mu)

    def test_rejects_too_many_snapshots(self):
        with pytest.raises(ConfigError):
            SolverConfig(nt=8, snapshots=9)

    def test_rejects_unknown_mean_mode(self):
        with pytest.raises(ConfigError):
            SolverConfig(mean_mode="drop")

    def test_snapshot_indices(self):
        config = SolverConfig(nt=16, snapshots=4)
        assert config.snapshot_indices() == [0, 4, 8, 12, 16]

    def test_round_trip(self):
        config = SolverConfig(eps=0.25, seed=3)
        restored = SolverConfig.from_dict(config.to_dict())
        assert restored == config


class TestInitialField:
    def test_mode(self):
        theta = initial_field("mode:1,0", 8)
        assert theta.values[0, 0] == pytest.approx(1.0)
        assert theta.mean() == pytest.approx(0.0, abs=1e-12)

    def test_random_is_reproducible(self):
        assert np.array_equal(initial_field("random:4", 16).values, initial_field("random:4", 16).values)

    @pytest.mark.parametrize("spec", ["bogus", "mode:1", "mode:a,b"])
    def test_rejects_invalid(self, spec):
        with pytest.raises(ConfigError):
            initial_field(spec, 8)


class TestNonlinearity:
    def test_single_mode_has_no_self_interaction(self):
        theta = initial_field("mode:1,0", 16)
        assert np.max(np.abs(nonlinearity(theta).values)) < 1e-12

    def test_divergence_and_advective_forms_agree(self, smooth_field):
        difference = nonlinearity(smooth_field).values - advective_form(smooth_field).values
        assert np.max(np.abs(difference)) < 1e-10

    def test_transport_conserves_energy(self, smooth_field):
        budget = energy_budget(smooth_field, 0.9)
        assert abs(budget["transport"]) < 1e-10
        assert budget["relative_residual"] < 1e-10
        assert budget["tendency"] < 0


class TestSolve:
    def test_single_mode_decays_exactly(self):
        config = _decaying_mode()
        trajectory = solve(config)
        assert trajectory.completed
        assert trajectory.times[-1] == pytest.approx(config.T)
        expected = np.exp(-config.T * (2 * np.pi) ** 1.8) * initial_field(config.initial, config.n).values
        assert np.max(np.abs(trajectory.final.values - expected)) < 1e-10

    def test_snapshot_residuals(self):
        trajectory = solve(_decaying_mode())
        assert len(trajectory.residuals) == len(trajectory.times) == 5
        assert all(r["divergence"] < 1e-12 for r in trajectory.residuals)

    def test_at_returns_latest_snapshot(self):
        trajectory = solve(_decaying_mode())
        assert trajectory.at(0.06) is trajectory.fields[2]
        with pytest.raises(ValueError):
            trajectory.at(-1.0)

    def test_blow_up_recorded(self):
        trajectory = solve(_decaying_mode(blowup_cap=1e-3))
        assert not trajectory.completed
        assert trajectory.blow_up_time == pytest.approx(0.025)
        assert not trajectory.reaches(0.1)

    def test_blow_up_strict(self):
        with pytest.raises(BlowUpDetected) as excinfo:
            solve(_decaying_mode(blowup_cap=1e-3), strict=True)
        assert excinfo.value.time == pytest.approx(0.025)

    def test_noise_grid_must_match(self, small_grid):
        config = SolverConfig(mu=0.9, eps=0.5, T=1.0, nt=16, n=32, snapshots=4)
        noise = coupled_noise(SolverConfig(mu=0.9, eps=0.5, T=1.0, nt=16, n=16, snapshots=4), sample(0, small_grid))
        with pytest.raises(ConfigError):
            solve(config, noise)

    def test_projected_noise_keeps_zero_mean(self, small_grid):
        config = SolverConfig(mu=0.9, eps=0.5, T=1.0, nt=16, n=16, snapshots=4)
        trajectory = solve(config, coupled_noise(config, sample(1, small_grid)))
        assert trajectory.completed
        assert abs(trajectory.final.mean()) < 1e-12
        assert trajectory.to_dict()["completed"] is True

    def test_kept_mean_mode_drifts(self, small_grid):
        config = SolverConfig(mu=0.9, eps=0.5, T=1.0, nt=16, n=16, snapshots=4, mean_mode="keep")
        trajectory = solve(config, coupled_noise(config, sample(1, small_grid)))
        assert abs(trajectory.final.mean()) > 0


class TestConvergence:
    def test_rejects_increasing_eps(self):
        with pytest.raises(ConfigError):
            eps_convergence(SolverConfig(), [0.25, 0.5])

    def test_resolved_nt_doubles_until_finest_eps_fits(self):
        config = SolverConfig(mu=0.9, T=0.25, nt=256, n=128)
        assert resolved_nt(config, 0.125) == 256
        assert resolved_nt(config, 2.0 ** -5) == 512

    def test_default_converge_config_resolves_finest_eps(self):
        defaults = ExperimentConfig()
        eps_list = defaults.get("solver", "eps_list")
        assert eps_list == [0.25, 0.125, 0.0625, 0.03125]
        config = SolverConfig(mu=defaults.get("solver", "mu"), T=defaults.get("solver", "T"),
                              nt=defaults.get("solver", "nt"), n=defaults.get("solver", "n"))
        assert config.n == 128
        finest = replace(config, eps=eps_list[-1])
        with pytest.raises(ResolutionError):
            finest.mollifier().check_resolved(finest.grid())
        nt = resolved_nt(config, eps_list[-1])
        finest.mollifier().check_resolved(NoiseGrid(nt, 128, 128, config.T))

    @pytest.mark.slow
    def test_finest_eps_noise_builds_on_128_grid(self):
        config = SolverConfig(eps=2.0 ** -5)
        config = replace(config, nt=resolved_nt(config))
        noise = coupled_noise(config, sample(0, config.grid()))
        assert noise.values.shape == (512, 128, 128)
        assert np.all(np.isfinite(noise.values))

    def test_refinement_requires_half_grid(self):
        with pytest.raises(ConfigError):
            grid_refinement_check(SolverConfig(n=32), n_coarse=12)

    def test_refinement_without_noise(self):
        config = _decaying_mode(n=32)
        report = grid_refinement_check(config)
        assert report["n_coarse"] == 16
        assert report["passed"]

    @pytest.mark.slow
    def test_eps_sequence(self):
        config = SolverConfig(mu=0.9, T=0.25, nt=64, n=16, snapshots=16)
        report = eps_convergence(config, [0.5, 0.25], seed=2, scales=(0.5, 0.25), centers=8)
        assert len(report["rows"]) == 1
        assert report["incomplete"] == []
        assert report["rows"][0]["diff_norm"] > 0
        assert report["alpha"] == pytest.approx(-0.22)
        assert report["mollifier_difference"] is not None


def test_field_arithmetic(smooth_field):
    doubled = smooth_field + smooth_field
    assert np.allclose(doubled.values, (2 * smooth_field).values)
    assert (smooth_field - smooth_field).l2_norm() == 0.0
    assert isinstance(doubled, PeriodicField)
