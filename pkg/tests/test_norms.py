"""负正则性范数估计测试"""

import numpy as np
import pytest

from sqg_rs.api import InsufficientSamplesError
from sqg_rs.models.field import PeriodicField
from sqg_rs.norms import besov_norm, littlewood_paley_norm, parabolic_time, weighted_time_norm


def _mode(n: int, k1: int, k2: int, amplitude: float = 1.0) -> PeriodicField:
    x = np.arange(n) / n
    x1, x2 = np.meshgrid(x, x, indexing="ij")
    return PeriodicField(amplitude * np.cos(2 * np.pi * (k1 * x1 + k2 * x2)))


class TestBesovNorm:
    def test_linear_in_field(self, smooth_field):
        base = besov_norm(smooth_field, -0.5, centers=16)
        tripled = besov_norm(3 * smooth_field, -0.5, centers=16)
        assert tripled.value == pytest.approx(3 * base.value, rel=1e-12)

    def test_zero_field(self):
        assert besov_norm(PeriodicField(np.zeros((32, 32))), -0.5, centers=8).value == 0.0

    def test_excludes_unresolved_scales(self, smooth_field):
        estimate = besov_norm(smooth_field, -0.5, scales=(0.5, 0.25, 0.0625), centers=8)
        assert estimate.excluded_scales == [0.0625]
        assert [lam for lam, _ in estimate.per_scale] == [0.5, 0.25]

    def test_all_scales_unresolved(self):
        with pytest.raises(InsufficientSamplesError):
            besov_norm(PeriodicField(np.ones((8, 8))), -0.5, scales=(0.25,))

    def test_rejects_alpha_above_family_order(self, smooth_field):
        with pytest.raises(ValueError):
            besov_norm(smooth_field, 2.0)

    def test_centers_fixed_by_seed(self, smooth_field):
        first = besov_norm(smooth_field, -0.5, centers=8, seed=5)
        second = besov_norm(smooth_field, -0.5, centers=8, seed=5)
        assert first.value == second.value
        assert first.meta["seed"] == 5


class TestLittlewoodPaley:
    def test_single_mode(self):
        assert littlewood_paley_norm(_mode(16, 1, 0), -1.0) == pytest.approx(0.5)

    def test_constant(self):
        assert littlewood_paley_norm(PeriodicField(np.full((8, 8), -2.0)), -1.0) == pytest.approx(2.0)

    def test_high_mode_penalized(self):
        assert littlewood_paley_norm(_mode(32, 5, 0), -1.0) == pytest.approx(2.0 ** -3)


class TestWeightedTimeNorm:
    @staticmethod
    def _decaying(count: int):
        times = [0.01 * (q + 1) for q in range(count)]
        fields = [_mode(32, 1, 0, np.exp(-t)) for t in times]
        return times, fields

    def test_parabolic_time(self):
        assert parabolic_time(0.25, 2.0) == pytest.approx(0.5)
        assert parabolic_time(4.0, 2.0) == 1.0

    def test_requires_eight_times(self):
        times, fields = self._decaying(7)
        with pytest.raises(InsufficientSamplesError):
            weighted_time_norm(times, fields, 0.1, -0.5, 0.0, 1.8, centers=8)

    @pytest.mark.parametrize("delta, eta", [(0.0, 0.0), (0.1, 0.2)])
    def test_rejects_invalid_exponents(self, delta, eta):
        times, fields = self._decaying(8)
        with pytest.raises(ValueError):
            weighted_time_norm(times, fields, delta, -0.5, eta, 1.8, centers=8)

    def test_dominates_pointwise_term(self):
        times, fields = self._decaying(9)
        estimate = weighted_time_norm(times, fields, 0.1, -0.5, 0.0, 1.8, scales=(0.5, 0.25), centers=8)
        pointwise = max(besov_norm(f, -0.5, (0.5, 0.25), 8).value for f in fields)
        assert estimate.meta["pointwise"] == pytest.approx(pointwise)
        assert estimate.value >= pointwise
        assert estimate.meta["times"] == 9
