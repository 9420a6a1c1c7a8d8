"""数值服务层测试：拟合、Monte Carlo、谱工具、Gauss 边缘与测试函数"""

import numpy as np
import pytest

from sqg_rs.api import InsufficientSamplesError
from sqg_rs.services import (
    GaussianMarginal,
    MonteCarloRunner,
    TestFunction,
    derivative_family,
    fit_loglog,
    make_generator,
    moment_row,
    power_warnings,
    stationary_variance,
)
from sqg_rs.services.spectral import dealias_mask, gauss_legendre, phi1, riesz_multiplier, wavenumbers
from sqg_rs.services.testfunctions import bump_mass, c2_norm


class TestFitLogLog:
    def test_exact_power_law(self):
        xs = [0.5, 0.25, 0.125]
        fit = fit_loglog(xs, [3.0 * x ** -1.5 for x in xs], target=-1.5)
        assert fit.slope == pytest.approx(-1.5)
        assert fit.max_residual < 1e-12
        assert fit.excluded == []

    def test_records_excluded_points(self):
        fit = fit_loglog([1.0, 0.5, 0.25, 0.125], [1.0, 0.0, float("nan"), 8.0])
        assert [e["reason"] for e in fit.excluded] == ["zero", "non_finite"]
        assert fit.slope == pytest.approx(-1.0)

    def test_requires_two_points(self):
        with pytest.raises(InsufficientSamplesError):
            fit_loglog([0.5], [1.0])

    def test_serialization(self):
        fit = fit_loglog([0.5, 0.25], [1.0, 2.0], meta={"label": "x"})
        data = fit.to_dict()
        assert data["slope"] == pytest.approx(-1.0)
        assert type(fit).from_dict(data).slope == pytest.approx(fit.slope)


class TestMonteCarlo:
    @staticmethod
    def _draw(rng, count):
        return rng.standard_normal(count)

    def test_independent_of_concurrency(self):
        serial = MonteCarloRunner(5, chunk_size=10, max_workers=1).run_sync(self._draw, 95)
        parallel = MonteCarloRunner(5, chunk_size=10, max_workers=8).run_sync(self._draw, 95)
        assert np.array_equal(serial, parallel)
        assert serial.shape == (95,)

    async def test_inside_event_loop(self):
        runner = MonteCarloRunner(5, chunk_size=10)
        inline = runner.run_sync(self._draw, 30)
        awaited = await runner.run(self._draw, 30)
        assert np.array_equal(inline, awaited)

    def test_streams_differ(self):
        runner = MonteCarloRunner(5)
        assert not np.array_equal(runner.run_sync(self._draw, 4, stream=(1,)), runner.run_sync(self._draw, 4, stream=(2,)))

    def test_blocks_receive_realization_indices(self):
        runner = MonteCarloRunner(0, chunk_size=4, max_workers=3)
        values = runner.run_blocks(lambda start, count: np.arange(start, start + count), 10)
        assert np.array_equal(values, np.arange(10))

    async def test_blocks_inside_event_loop(self):
        runner = MonteCarloRunner(0, chunk_size=3)
        values = runner.run_blocks(lambda start, count: np.full(count, start), 7)
        assert values.tolist() == [0, 0, 0, 3, 3, 3, 6]

    def test_chunks(self):
        assert MonteCarloRunner(0, chunk_size=4).chunks(10) == [(0, 4), (1, 4), (2, 2)]

    def test_rejects_invalid_sizes(self):
        with pytest.raises(ValueError):
            MonteCarloRunner(0, chunk_size=0)

    def test_generator_keys(self):
        first = make_generator(1, 2, 3).standard_normal(3)
        assert np.array_equal(first, make_generator(1, 2, 3).standard_normal(3))
        assert not np.array_equal(first, make_generator(1, 3, 2).standard_normal(3))

    def test_moment_row_and_power_warning(self):
        row = moment_row(0.5, np.array([1.0, -1.0, 3.0, -3.0]))
        assert row.mean_sq == pytest.approx(5.0)
        assert row.mean == pytest.approx(0.0)
        assert power_warnings([row], threshold=0.2) != []


class TestSpectral:
    def test_wavenumbers(self):
        k1, k2 = wavenumbers(4)
        assert list(k1[:, 0]) == [0, 1, -2, -1]
        assert np.array_equal(k2, k1.T)

    def test_riesz_identity(self):
        total = riesz_multiplier(1, 16) ** 2 + riesz_multiplier(2, 16) ** 2
        k1, k2 = wavenumbers(16)
        kept = (np.abs(k1) < 8) & (np.abs(k2) < 8) & ((k1 != 0) | (k2 != 0))
        assert np.allclose(total[kept], -1.0)
        assert total[0, 0] == 0

    def test_dealias_mask(self):
        mask = dealias_mask(12)
        assert mask[3, 0] and not mask[4, 0]

    def test_phi1(self):
        assert phi1(np.array([0.0]))[0] == 1.0
        assert phi1(np.array([2.0]))[0] == pytest.approx((1 - np.exp(-2.0)) / 2.0)

    def test_gauss_legendre_is_read_only(self):
        nodes, weights = gauss_legendre(4, 0.0, 2.0)
        assert weights.sum() == pytest.approx(2.0)
        with pytest.raises(ValueError):
            nodes[0] = 0.0
        with pytest.raises(ValueError):
            weights *= 2.0
        assert gauss_legendre(4, 0.0, 2.0)[1].sum() == pytest.approx(2.0)


class TestGaussianMarginal:
    def test_unmollified_variance(self):
        marginal = GaussianMarginal(0.9, 16, [(0.5, None)])
        assert np.allclose(marginal.variance()[0], stationary_variance(0.9, 16, 0.5))

    def test_sample_shape(self):
        marginal = GaussianMarginal(0.9, 8, [(0.5, None), (0.25, None)])
        assert marginal.sample(make_generator(0)).shape == (2, 8, 8)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            GaussianMarginal(0.9, 8, [])

    def test_zero_mode_variance_is_time(self):
        assert stationary_variance(0.9, 8, 0.3)[0, 0] == pytest.approx(0.3)


class TestTestFunctions:
    def test_mass(self):
        assert TestFunction(0.25).mass() == pytest.approx(bump_mass() / c2_norm())
        assert TestFunction(0.25, derivative=(1, 0)).mass() == 0.0

    def test_values_integrate_to_mass(self):
        test = TestFunction(0.25, center=(0.5, 0.5))
        assert np.mean(test.values(64)) == pytest.approx(test.mass(), rel=1e-8)

    def test_rejects_large_scale(self):
        with pytest.raises(ValueError):
            TestFunction(1.5)

    def test_derivative_family(self):
        assert len(derivative_family(0.5)) == 6
        assert len(derivative_family(0.5, order=1)) == 3
