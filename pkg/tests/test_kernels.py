"""分数阶热核、Riesz 分解与二进分解测试"""

from dataclasses import replace

import numpy as np
import pytest

from sqg_rs.api import ResolutionError
from sqg_rs.kernels import (
    ConvolvedKernel,
    KernelSpec,
    annulus_cutoff,
    convolution_order_fit,
    covariance_order,
    divergence_residual,
    dyadic_decompose,
    heat,
    heat_deriv,
    heat_kernel_eval,
    kernel_order_fit,
    mollified_kernel_check,
    parabolic_norm,
    periodized_gaussian,
    perp_velocity,
    piece_bound_fit,
    product_order_fit,
    reassemble,
    reassembly_error,
    riesz_factorization_check,
    riesz_heat,
    scaling_law_check,
    semigroup_error,
)
from sqg_rs.models.field import PeriodicField
from sqg_rs.services.spectral import heat_multiplier


class TestKernelSpec:
    def test_orders(self):
        assert heat(0.9).order == pytest.approx(-2.0)
        assert KernelSpec("heat_deriv", 0.9, index=1).order == pytest.approx(-3.0)
        assert riesz_heat(1, 0.9).order == pytest.approx(-2.0)
        assert KernelSpec("riesz", 0.9).order == pytest.approx(-3.8)

    def test_convolution_order_adds_scaling(self):
        kernel = ConvolvedKernel(heat(0.9), heat(0.9))
        assert kernel.order == pytest.approx(-2.0 - 2.0 + 3.8)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            KernelSpec("poisson", 0.9)

    def test_multiplier_matches_exponential(self):
        assert np.allclose(heat(0.9).multiplier(0.01, 16), heat_multiplier(0.9, 0.01, 16))

    def test_zero_before_origin(self):
        assert np.all(heat(0.9).multiplier(-0.1, 8) == 0)


class TestHeatKernel:
    def test_pointwise_series_matches_multiplier(self):
        spec = heat(0.9)
        x = (0.1, 0.3)
        direct = heat_kernel_eval(0.9, 0.05, x, mode_cut=15)
        assert spec.evaluate(0.05, [x], n=32)[0] == pytest.approx(direct, abs=1e-10)

    def test_poisson_summation_at_mu_one(self):
        series = heat_kernel_eval(1.0, 0.01, (0.1, 0.2), mode_cut=20)
        images = periodized_gaussian(0.01, (0.1, 0.2))
        assert series == pytest.approx(images, rel=1e-9)

    def test_semigroup(self):
        assert semigroup_error(0.9, 0.05, 0.05, n=32) < 1e-9

    def test_rejects_nonpositive_time(self):
        with pytest.raises(ValueError):
            heat_kernel_eval(0.9, 0.0, (0.0, 0.0), 4)

    def test_parabolic_norm(self):
        assert parabolic_norm(0.25, np.array([0.1, 0.0]), 1.0) == pytest.approx(0.5)

    @pytest.mark.slow
    def test_full_space_scaling_law(self):
        report = scaling_law_check(0.9)
        assert report["max_relative_error"] < 1e-4


class TestRiesz:
    def test_factorization(self):
        report = riesz_factorization_check(32)
        assert report["factorization_error"] < 1e-12
        assert report["smoothing_exponent"] == pytest.approx(1.0, abs=1e-9)

    def test_perp_velocity_is_divergence_free(self, smooth_field):
        u1, u2 = perp_velocity(smooth_field)
        assert divergence_residual(u1, u2) < 1e-12

    def test_riesz_of_constant_vanishes(self):
        u1, u2 = perp_velocity(PeriodicField(np.full((8, 8), 3.0)))
        assert np.allclose(u1.values, 0.0)
        assert np.allclose(u2.values, 0.0)


class TestDyadic:
    def test_partition_of_unity(self):
        r = np.linspace(2.0 ** -5, 1.0, 200)
        total = sum(annulus_cutoff(level, r) for level in range(6))
        assert np.allclose(total, 1.0, atol=1e-12)

    def test_reassembly_sums_piece_samples(self):
        t = 0.01
        pieces = dyadic_decompose(heat(0.9), 3, 32, time_nodes=4, sample_times=[t])
        report = reassembly_error(pieces, heat(0.9), t)
        assert report["points"] > 0
        assert report["max_relative_error"] < 1e-6

    def test_reassembly_notices_a_missing_piece(self):
        t = 0.01
        pieces = dyadic_decompose(heat(0.9), 3, 32, time_nodes=4, sample_times=[t])
        broken = [replace(p, values=np.zeros_like(p.values)) if p.level == 1 else p for p in pieces]
        assert reassembly_error(broken, heat(0.9), t)["max_relative_error"] > 0.1

    def test_reassemble_reads_the_sampled_node(self):
        t = 0.02
        pieces = dyadic_decompose(heat(0.9), 2, 32, time_nodes=4, sample_times=[t])
        expected = sum(p.values[-1] for p in pieces)
        assert np.array_equal(reassemble(pieces, t), expected)
        assert np.array_equal(reassemble(pieces, t, corrected=True), sum(p.corrected()[-1] for p in pieces))

    def test_sample_times_do_not_change_moments(self):
        plain = dyadic_decompose(heat(0.9), 1, 32, time_nodes=8)
        sampled = dyadic_decompose(heat(0.9), 1, 32, time_nodes=8, sample_times=[0.05])
        for a, b in zip(plain, sampled):
            assert b.times.size == a.times.size + 1
            assert b.moments == pytest.approx(a.moments)

    def test_slice_requires_a_sampled_time(self):
        pieces = dyadic_decompose(heat(0.9), 1, 32, time_nodes=4)
        with pytest.raises(ValueError):
            pieces[0].slice_at(0.123456)

    def test_rejects_too_many_levels(self):
        with pytest.raises(ResolutionError):
            dyadic_decompose(heat(0.9), 5, 32)

    def test_rejects_non_heat_kernels(self):
        with pytest.raises(ValueError):
            dyadic_decompose(riesz_heat(1, 0.9), 1, 32)

    def test_moment_correction_cancels_moments(self):
        pieces = dyadic_decompose(heat(0.9), 1, 32, time_nodes=8)
        assert [p.level for p in pieces] == [0, 1]
        for piece in pieces:
            assert piece.moment_residual < 1e-6
            assert piece.corrected().shape == piece.values.shape
            assert piece.support_radius == 2.0 ** (1 - piece.level)


@pytest.mark.slow
class TestOrderFits:
    def test_heat_kernel_order(self):
        fit = kernel_order_fit(heat(0.9))
        assert fit.target == pytest.approx(-2.0)
        assert fit.slope == pytest.approx(fit.target, abs=0.1)

    def test_derivative_order(self):
        fit = kernel_order_fit(heat_deriv(1, 0.9))
        assert fit.target == pytest.approx(-3.0)
        assert fit.slope == pytest.approx(-3.0, abs=0.2)

    def test_riesz_kernel_order(self):
        fit = kernel_order_fit(riesz_heat(1, 0.9))
        assert fit.slope == pytest.approx(-2.0, abs=0.15)

    def test_space_time_convolution_order(self):
        fit = convolution_order_fit(heat(0.9), heat(0.9))
        assert fit.target == pytest.approx(-0.2)
        assert fit.slope == pytest.approx(-0.2, abs=0.2)

    def test_pointwise_product_order(self):
        fit = product_order_fit(heat(0.9), heat(0.9))
        assert fit.target == pytest.approx(-4.0)
        assert fit.slope == pytest.approx(-4.0, abs=0.2)

    def test_covariance_order(self):
        fit = covariance_order(0.9)
        assert fit.target == pytest.approx(-0.4)
        assert fit.slope == pytest.approx(-0.4, abs=0.3)

    def test_mollified_bounds_are_uniform_in_eps(self):
        report = mollified_kernel_check(heat(0.9), strict=False)
        assert report["eps"] == [2.0 ** -3, 2.0 ** -4, 2.0 ** -5, 2.0 ** -6]
        assert report["first_ratio"] < 3.0
        assert report["second_ratio"] < 3.0

    def test_dyadic_piece_bounds(self):
        pieces = dyadic_decompose(heat(0.9), 6, 256)
        fit = piece_bound_fit(pieces, levels=range(2, 7), target=2.0)
        assert fit.meta["levels"] == [2, 3, 4, 5, 6]
        assert fit.slope == pytest.approx(2.0, abs=0.2)
