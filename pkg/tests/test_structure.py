"""模型空间生成与齐次度测试"""

from fractions import Fraction

import pytest

from sqg_rs.api import NonTerminationError
from sqg_rs.models.homogeneity import Homogeneity, MultiIndex
from sqg_rs.models.symbol import XI, Poly, make_int_deriv, make_product, make_riesz, parse_symbol
from sqg_rs.structure import (
    cycle_increment,
    default_gamma,
    display_level,
    generate,
    homogeneity,
    is_subcritical,
    kappa_bound,
    negative_symbols,
    renormalization_view,
    shape_view,
    threshold,
)

MU = Fraction(9, 10)
KAPPA = Fraction(1, 100)


def _forms(rows):
    return sorted(hom.sort_key for _, hom, _ in rows)


@pytest.fixture(scope="module")
def uncut_space():
    return generate(MU, KAPPA, 2, gamma_cut=None, include_polynomials=False)


class TestHomogeneity:
    def test_noise_integral(self):
        assert homogeneity(XI).evaluate(MU, KAPPA) == MU - 1 - KAPPA

    def test_riesz_preserves_homogeneity(self):
        assert homogeneity(make_riesz(2, XI)) == homogeneity(XI)

    def test_integration_gains_two_mu_minus_one(self):
        symbol = make_int_deriv(1, make_product(make_riesz(1, XI), XI))
        expected = 2 * (MU - 1 - KAPPA) + 2 * MU - 1
        assert homogeneity(symbol).evaluate(MU, KAPPA) == expected

    def test_polynomial_scaled_degree(self):
        index = MultiIndex(1, 1, 0)
        assert homogeneity(Poly(index)).evaluate(MU, 0) == 2 * MU + 1

    def test_default_gamma(self):
        assert default_gamma().evaluate(MU, KAPPA) == 1 + 2 * KAPPA - MU


class TestSubcriticality:
    def test_threshold_is_two_thirds(self):
        assert threshold() == Fraction(2, 3)

    def test_increment_vanishes_at_threshold(self):
        assert cycle_increment().evaluate(threshold(), 0) == 0

    @pytest.mark.parametrize("mu, expected", [(Fraction(9, 10), True), (Fraction(2, 3), False), (Fraction(1, 2), False)])
    def test_is_subcritical(self, mu, expected):
        assert is_subcritical(mu).subcritical is expected

    def test_kappa_bound(self):
        assert kappa_bound(MU) == Fraction(7, 80)

    def test_witness_serializes(self):
        data = is_subcritical(MU).to_dict()
        assert data["subcritical"] is True
        assert data["value"] == str(3 * MU - 2)


class TestGenerate:
    def test_negative_sector(self, exact_space):
        negatives = negative_symbols(exact_space)
        assert len(negatives) == 5
        values = [hom.evaluate(MU, KAPPA) for _, hom in negatives]
        assert values == sorted(values)
        assert values[0] == 2 * MU - 2 - 2 * KAPPA

    def test_renormalization_view_has_four_shapes(self, exact_space):
        rows = renormalization_view(exact_space)
        assert len(rows) == 4
        values = sorted(hom.evaluate(MU, KAPPA) for _, hom, _ in rows)
        assert values == [2 * MU - 2 - 2 * KAPPA] * 2 + [MU - 1 - KAPPA] * 2
        shapes = {symbol: count for symbol, _, count in rows}
        assert shapes[XI] == 1
        assert shapes[make_product(make_riesz(1, XI), XI)] == 1
        assert shapes[make_product(make_riesz(2, XI), XI)] == 1

    def test_collapsed_view_merges_indices(self, exact_space):
        rows = shape_view(negative_symbols(exact_space), mode="collapsed")
        assert len(rows) == 3
        assert sum(count for _, _, count in rows) == 5

    def test_min_homogeneity(self, exact_space):
        value, _ = exact_space.min_homogeneity()
        assert value == 2 * MU - 2 - 2 * KAPPA

    def test_basis_below_cut(self, exact_space):
        cut = exact_space.gamma_cut
        assert all(exact_space.value(r) < cut for r in exact_space.basis)

    def test_high_homogeneity_symbols_excluded(self, exact_space):
        assert not exact_space.contains(make_int_deriv(1, make_riesz(1, XI)))
        assert exact_space.contains(XI)

    def test_no_diagnostics_at_fixed_point(self, exact_space):
        assert exact_space.diagnostics == ()

    def test_near_threshold_respects_minimum_form(self):
        mu = Fraction(4, 5) + Fraction(1, 1000)
        kappa = Fraction(1, 10000)
        space = generate(mu, kappa, 3)
        floor = -2 + 2 * mu - 2 * kappa
        assert all(hom.evaluate(mu, kappa) >= floor for _, hom in negative_symbols(space))

    def test_uncut_generation_lists_levels(self):
        space = generate(MU, KAPPA, 1, gamma_cut=None)
        assert len(space.tilde(1)) > 0
        assert len(space.bar(1)) > 0

    def test_rejects_supercritical_mu(self):
        with pytest.raises(ValueError):
            generate(Fraction(1, 2), 0, 1)

    def test_depth_cap(self):
        with pytest.raises(NonTerminationError):
            generate(MU, KAPPA, 5, max_depth=4)

    def test_symbol_cap(self):
        with pytest.raises(NonTerminationError):
            generate(MU, KAPPA, 2, max_symbols=2)

    def test_records_serialize(self, exact_space):
        records = exact_space.to_json()
        assert {"symbol", "homogeneity", "level", "family"} <= set(records[0])
        texts = [r["symbol"] for r in records]
        assert "I[Xi]" in texts


class TestLevelTables:
    def test_bar_zero(self, uncut_space):
        assert display_level(uncut_space, "bar", 0) == [(XI, Homogeneity(-1, 1, -1), 1)]

    def test_tilde_one(self, uncut_space):
        rows = display_level(uncut_space, "tilde", 1)
        assert _forms(rows) == [(-2, 2, -2), (-1, 1, -1)]
        assert [count for _, _, count in rows] == [2, 2]

    def test_bar_one(self, uncut_space):
        rows = display_level(uncut_space, "bar", 1)
        assert _forms(rows) == [(-3, 4, -2), (-2, 3, -1)]
        assert [count for _, _, count in rows] == [4, 4]
        assert {shape.text() for shape, _, _ in rows} == {"I[R[I[Xi]]]", "I[R[I[Xi]]*I[Xi]]"}

    def test_tilde_two_has_eight_shapes(self, uncut_space):
        rows = display_level(uncut_space, "tilde", 2)
        expected = [
            Homogeneity(-2, 3, -1),
            Homogeneity(-3, 4, -2),
            Homogeneity(-3, 4, -2),
            Homogeneity(-4, 5, -3),
            Homogeneity(-4, 6, -2),
            Homogeneity(-5, 7, -3),
            Homogeneity(-5, 7, -3),
            Homogeneity(-6, 8, -4),
        ]
        assert len(rows) == 8
        assert _forms(rows) == sorted(h.sort_key for h in expected)

    def test_polynomials_stay_out_of_the_tables(self):
        space = generate(MU, KAPPA, 1, gamma_cut=None)
        assert len(display_level(space, "tilde", 1)) == 2
        assert len(space.tilde(1)) > 4


class TestSymbolText:
    def test_parse_canonical_product(self):
        symbol = make_product(make_riesz(1, XI), XI)
        assert parse_symbol(symbol.text()) == symbol
        assert parse_symbol("R1[I[Xi]]*I[Xi]") == symbol

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_symbol("Q[Xi]")

    def test_integration_of_polynomial_is_zero(self):
        assert make_int_deriv(1, Poly(MultiIndex(0, 1, 0))) is None
