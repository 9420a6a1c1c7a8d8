"""白噪声采样、光滑化与二阶混沌测试"""

import numpy as np
import pytest

from sqg_rs.api import ResolutionError
from sqg_rs.noise import (
    Mollifier,
    NoiseGrid,
    cell_value,
    chaos_I2,
    chaos_I2_estimate,
    isometry_check,
    mollify,
    noise_regularity,
    regularity_grid,
    restrict,
    sample,
    space_time_bump,
)


def _cell_centers(grid):
    t = (np.arange(grid.nt) + 0.5) * grid.dt
    x = np.arange(grid.nx) * grid.dx
    y = np.arange(grid.ny) * grid.dy
    return np.meshgrid(t, x, y, indexing="ij")


class TestSampling:
    def test_reproducible(self):
        grid = NoiseGrid(4, 8, 8)
        assert np.array_equal(sample(3, grid).values, sample(3, grid).values)

    def test_realizations_differ(self):
        grid = NoiseGrid(4, 8, 8)
        assert not np.array_equal(sample(3, grid, 0).values, sample(3, grid, 1).values)

    def test_layers_independent_of_horizon(self):
        short = sample(5, NoiseGrid(4, 8, 8, T=1.0))
        long = sample(5, NoiseGrid(8, 8, 8, T=2.0))
        assert np.array_equal(short.values, long.values[:4])

    def test_single_cell_lookup(self):
        grid = NoiseGrid(4, 8, 8)
        xi = sample(9, grid, realization=2)
        for i, j, k in [(0, 0, 0), (3, 7, 7), (2, 5, 1)]:
            assert cell_value(9, grid, i, j, k, realization=2) == xi.values[i, j, k]

    def test_cell_lookup_rejects_outside(self):
        with pytest.raises(IndexError):
            cell_value(0, NoiseGrid(2, 4, 4), 2, 0, 0)

    def test_extra_rows_keep_existing_cells(self):
        narrow_grid, wide_grid = NoiseGrid(4, 8, 8), NoiseGrid(4, 16, 8)
        narrow = sample(5, narrow_grid).values * np.sqrt(narrow_grid.cell_volume)
        wide = sample(5, wide_grid).values * np.sqrt(wide_grid.cell_volume)
        assert np.allclose(narrow, wide[:, :8, :], rtol=1e-12, atol=0.0)

    def test_cell_variance(self):
        grid = NoiseGrid(8, 32, 32)
        xi = sample(0, grid)
        assert np.var(xi.values) * grid.cell_volume == pytest.approx(1.0, rel=0.05)

    def test_values_read_only(self):
        xi = sample(0, NoiseGrid(2, 4, 4))
        with pytest.raises(ValueError):
            xi.values[0, 0, 0] = 1.0

    def test_pairing_isometry_on_indicator(self):
        grid = NoiseGrid(2, 4, 4)
        phi = np.zeros(grid.shape)
        phi[0, 0, 0] = 1.0
        xi = sample(1, grid)
        assert xi.pair(phi) == pytest.approx(xi.values[0, 0, 0] * grid.cell_volume)

    def test_rejects_degenerate_grid(self):
        with pytest.raises(ValueError):
            NoiseGrid(1, 8, 8)

    def test_restrict_preserves_mass(self):
        xi = sample(2, NoiseGrid(2, 8, 8))
        coarse = restrict(xi)
        assert coarse.grid.shape == (2, 4, 4)
        fine_mass = xi.values.sum() * xi.grid.cell_volume
        coarse_mass = coarse.values.sum() * coarse.grid.cell_volume
        assert coarse_mass == pytest.approx(fine_mass, abs=1e-10)


class TestMollifier:
    @pytest.mark.parametrize("profile", ["bump", "flat"])
    def test_unit_mass(self, profile):
        assert Mollifier(0.25, profile=profile, mu=0.9).mass() == pytest.approx(1.0, abs=1e-6)

    def test_literal_time_scaling(self):
        mollifier = Mollifier(0.5, mu=0.9, scaling="literal")
        assert mollifier.time_width == pytest.approx(0.25)

    def test_rejects_unknown_profile(self):
        with pytest.raises(ValueError):
            Mollifier(0.25, profile="triangle")

    def test_discrete_kernel_normalized(self, small_grid):
        kernel = Mollifier(0.5, mu=0.9).kernel_grid(small_grid)
        assert kernel.sum() * small_grid.cell_volume == pytest.approx(1.0)

    def test_under_resolved(self):
        grid = NoiseGrid(4, 8, 8)
        with pytest.raises(ResolutionError):
            mollify(sample(0, grid), Mollifier(0.05, mu=0.9))

    def test_mollify_preserves_mean(self, small_grid):
        xi = sample(4, small_grid)
        smooth = mollify(xi, Mollifier(0.5, mu=0.9))
        assert smooth.mean() == pytest.approx(float(np.mean(xi.values)), abs=1e-10)
        assert smooth.slice(0).n == small_grid.nx

    def test_space_time_bump_shape(self, small_grid):
        bump = space_time_bump(small_grid, (0.5, 0.5, 0.5), 0.5, 1.8)
        assert bump.shape == small_grid.shape
        assert bump.min() >= 0.0


class TestIsometry:
    def test_indicator_variance_is_cell_volume(self):
        grid = NoiseGrid(4, 8, 8)
        indicator = np.zeros(grid.shape)
        indicator[1, 2, 3] = 1.0
        (row,) = isometry_check(3, grid, [(indicator, indicator)], n_realizations=2000)
        assert row.exact == pytest.approx(grid.cell_volume)
        assert abs(row.z_score) < 3.0

    def test_disjoint_supports_are_uncorrelated(self):
        grid = NoiseGrid(4, 8, 8)
        _, x, _ = _cell_centers(grid)
        left = np.where(x < 0.5, 1.0, 0.0)
        (row,) = isometry_check(4, grid, [(left, 1.0 - left)], n_realizations=2000)
        assert row.exact == 0.0
        assert abs(row.estimate) < 3.0 * row.stderr

    def test_rejects_mismatched_shape(self):
        with pytest.raises(ValueError):
            isometry_check(0, NoiseGrid(2, 4, 4), [(np.ones((2, 4)), np.ones((2, 4)))], n_realizations=2)

    @pytest.mark.slow
    def test_fixed_pairs_on_reference_grid(self):
        grid = NoiseGrid(16, 64, 64)
        t, x, y = _cell_centers(grid)
        wave = np.sin(np.pi * t) * np.cos(2 * np.pi * x)
        shifted = np.sin(np.pi * t) * np.cos(2 * np.pi * (x - 0.1))
        ramp = t * np.sin(2 * np.pi * y)
        blob = np.exp(-((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.02)
        pairs = [(wave, wave), (wave, shifted), (ramp, blob), (blob, blob), (shifted, np.ones(grid.shape))]
        rows = isometry_check(0, grid, pairs, n_realizations=10_000)
        assert len(rows) == 5
        for row in rows:
            assert abs(row.z_score) < 3.0
            assert row.relative_error < 0.05


class TestChaos:
    def test_wick_centering(self):
        f = np.eye(2)
        assert chaos_I2(f, np.array([1.0, 1.0]), 1.0, "wick") == pytest.approx(0.0)
        assert chaos_I2(f, np.array([2.0, 0.0]), 1.0, "wick") == pytest.approx(2.0)

    def test_hermite_normalization(self):
        value = chaos_I2(np.eye(2), np.array([2.0, 0.0]), 1.0, "hermite")
        assert value == pytest.approx(np.sqrt(2.0))

    def test_isometry(self):
        estimate = chaos_I2_estimate(np.eye(6), 1.0, n_samples=4000, seed=11)
        assert estimate.norm_sq == pytest.approx(6.0)
        assert estimate.second_moment / estimate.norm_sq == pytest.approx(1.0, abs=0.2)
        assert abs(estimate.mean) < 5 * estimate.stderr

    def test_rejects_non_square(self):
        with pytest.raises(ValueError):
            chaos_I2_estimate(np.ones((2, 3)), 1.0)

    def test_rejects_unknown_normalization(self):
        with pytest.raises(ValueError):
            chaos_I2(np.eye(2), np.zeros(2), 1.0, "ito")


@pytest.mark.parametrize("lam", [0.5, 0.25, 0.125, 0.0625, 0.03125])
def test_regularity_grid_resolves_quarter_lambda(lam):
    grid = regularity_grid(lam, 0.9)
    Mollifier(0.25 * lam, mu=0.9).check_resolved(grid)
    assert grid.T == pytest.approx(2.0 * lam ** 1.8)
    assert grid.nx * lam >= 8


@pytest.mark.slow
def test_noise_regularity_slope():
    lambdas = [0.5, 0.25, 0.125, 0.0625, 0.03125]
    fit = noise_regularity(0.9, lambdas, n_samples=1000, seed=0)
    assert fit.target == pytest.approx(-3.8)
    assert fit.slope == pytest.approx(fit.target, abs=0.15)
    assert fit.meta["grids"] == [16, 32, 64, 128, 256]
