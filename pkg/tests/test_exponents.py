import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from infospec.classical import FiniteMeasure, kl_divergence
from infospec.errors import InputError, PropertyFailure, SizeError
from infospec.exponents import (
    B_e_from_rates,
    B_e_star_from_rates,
    B_e_star_star,
    ExponentQuery,
    b_e_forms_agree,
    construct_tilted_test,
    dual_of_B_e_star,
    han_formula_check,
    han_kobayashi_exponent,
    han_kobayashi_tilted,
    hoeffding_exponent,
    hoeffding_tilted,
    quantum_hoeffding_lower_bound,
    random_atom_model,
    two_point_B_e_star,
    two_point_rates,
)
from infospec.quantum import quantum_relative_entropy
from infospec.rates import RateFunction, cramer_rates, grid_tolerance

GRID = np.linspace(-3, 3, 601)


@pytest.fixture
def pair():
    return FiniteMeasure([0.3, 0.7]), FiniteMeasure([0.6, 0.4])


@pytest.fixture
def rates(pair):
    return cramer_rates(*pair, GRID)


class TestQuery:
    def test_validation(self):
        with pytest.raises(InputError):
            ExponentQuery(theta_points=10)
        with pytest.raises(InputError):
            ExponentQuery(epsilon=2.0)


class TestHoeffding:
    def test_zero_rate_is_divergence(self, pair):
        assert hoeffding_exponent(*pair, 0.0).value == kl_divergence(*pair)

    @pytest.mark.parametrize("r", [0.01, 0.05, 0.2, 0.5])
    def test_matches_tilted(self, pair, r):
        assert hoeffding_exponent(*pair, r).value == pytest.approx(hoeffding_tilted(*pair, r), abs=1e-9)

    def test_decreasing_in_r(self, pair):
        vals = [hoeffding_exponent(*pair, r).value for r in np.linspace(0, 0.5, 11)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))

    def test_quantum_commuting(self, pair):
        q = np.diag(pair[0].weights), np.diag(pair[1].weights)
        for r in (0.05, 0.2):
            assert quantum_hoeffding_lower_bound(*q, r).value == pytest.approx(hoeffding_exponent(*pair, r).value, abs=1e-9)

    def test_quantum_zero_rate(self, example_pair):
        assert quantum_hoeffding_lower_bound(*example_pair, 0.0).value == pytest.approx(
            quantum_relative_entropy(*example_pair)
        )

    def test_negative_rate(self, pair):
        with pytest.raises(InputError):
            hoeffding_exponent(*pair, -0.1)


class TestHanKobayashi:
    def test_zero_below_reverse_divergence(self, pair):
        d = kl_divergence(pair[1], pair[0])
        for r in np.linspace(0, d, 5):
            assert han_kobayashi_exponent(*pair, r).value == 0.0

    @pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
    def test_matches_tilted(self, pair, r):
        assert han_kobayashi_exponent(*pair, r).value == pytest.approx(han_kobayashi_tilted(*pair, r), abs=1e-9)

    def test_optimum_at_infinity(self, pair):
        # for large r the objective keeps rising towards r + min log(rho/sigma)
        for r in (3.0, 6.0):
            res = han_kobayashi_exponent(*pair, r)
            assert res.value == pytest.approx(r + math.log(0.5), abs=1e-12)
            assert res.optimizer == -math.inf and res.flags

    def test_support_mismatch_gives_positive_value(self):
        rho, sigma = FiniteMeasure([1.0, 0.0]), FiniteMeasure([0.5, 0.5])
        assert han_kobayashi_exponent(rho, sigma, 0.0).value == pytest.approx(math.log(2))


class TestRateForms:
    @pytest.mark.parametrize("r", [0.02, 0.1, 0.3])
    def test_b_e_matches_hoeffding(self, pair, rates, r):
        eta, zeta, _ = rates
        res = B_e_from_rates(eta, zeta, r)
        assert b_e_forms_agree(res, grid_tolerance(GRID))
        assert res.value == pytest.approx(hoeffding_exponent(*pair, r).value, abs=0.02)

    @pytest.mark.parametrize("r", [0.2, 0.5, 1.0])
    def test_b_e_star_matches_han_kobayashi(self, pair, rates, r):
        res = B_e_star_from_rates(rates[2], r)
        assert res.value == pytest.approx(han_kobayashi_exponent(*pair, r).value, abs=grid_tolerance(GRID))

    def test_b_e_star_nonpositive_rate(self, rates):
        assert B_e_star_from_rates(rates[2], -0.1).value <= 0.0 + 1e-12

    def test_b_e_empty_set(self):
        g = [0.0, 0.5, 1.0]
        eta = RateFunction(g, [0.5, 0.2, 0.0], "eta_lower")
        res = B_e_from_rates(eta, RateFunction(g, [0.0, 0.3, 0.9], "zeta_lower"), 1.0)
        assert res.value == -math.inf and "empty constraint set" in res.flags

    def test_b_e_star_star_dual(self, rates):
        r_grid = np.linspace(0, 7, 701)
        for r in (0.05, 0.5):
            ss = B_e_star_star(rates[2], r)
            assert ss.value == pytest.approx(dual_of_B_e_star(rates[2], r, r_grid), abs=grid_tolerance(GRID) + 0.01)

    def test_grids_must_match(self, rates):
        other = RateFunction(GRID[:10], rates[1].values[:10], "zeta_lower")
        with pytest.raises(InputError):
            B_e_from_rates(rates[0], other, 0.1)

    def test_disagreement_raises(self):
        # a non-monotone table violates the duality
        zc = RateFunction([0.0, 0.1, 0.2, 0.3], [0.0, 5.0, 5.0, 0.0], "zeta_c_upper")
        with pytest.raises(PropertyFailure):
            B_e_star_from_rates(zc, 0.5)
        assert "dual forms disagree" in B_e_star_from_rates(zc, 0.5, check=False).flags


class TestAtomModels:
    def test_random_models_agree(self, rng):
        g = np.linspace(-2, 2, 81)
        for _ in range(30):
            m = random_atom_model(rng, g)
            for r in (0.05, 0.5):
                assert b_e_forms_agree(B_e_from_rates(m.eta(g), m.zeta(g), r), grid_tolerance(g))
                B_e_star_from_rates(m.zeta_c(g), r)

    def test_grid_must_straddle_zero(self, rng):
        with pytest.raises(InputError):
            random_atom_model(rng, np.linspace(0.1, 1, 5))


class TestTwoPoint:
    @pytest.mark.parametrize("c", [0.2, 0.6])
    def test_piecewise(self, c):
        eta, zc = two_point_rates(c, np.linspace(-2, 2, 401))
        for r in (-0.3, 0.0, c / 2, c, c + 0.4):
            assert B_e_star_from_rates(zc, r).value == pytest.approx(two_point_B_e_star(c, r), abs=0.011)
            rep = han_formula_check(eta, zc, r) if r >= 0 else None
            if rep is not None:
                assert rep.equal == (r <= c)
                assert rep.condition_holds == (r <= c)

    def test_report_fields(self):
        eta, zc = two_point_rates(0.3, np.linspace(-1, 1, 201))
        d = han_formula_check(eta, zc, 0.5).as_dict()
        assert set(d) == {"han_value", "theorem4_value", "condition_holds", "equal"}
        assert d["han_value"] == pytest.approx(0.5, abs=0.011)
        assert d["theorem4_value"] == pytest.approx(0.3)


class TestTiltedTest:
    def test_classical(self, pair):
        r, a, n = 0.3, 0.0, 8
        t = construct_tilted_test(pair, a, r, n)
        assert t.tilted
        assert t.evaluation.alpha == pytest.approx(math.exp(-n * r), rel=1e-12)

    def test_untouched_when_rate_met(self, pair):
        t = construct_tilted_test(pair, -0.5, 0.01, 6)
        assert not t.tilted

    def test_quantum(self, example_pair):
        t = construct_tilted_test(example_pair, 0.2, 0.4, 5)
        assert t.evaluation.alpha == pytest.approx(math.exp(-2.0), rel=1e-12)
        assert_allclose(t.test, t.test.conj().T)

    def test_cap(self, pair):
        with pytest.raises(SizeError):
            construct_tilted_test(pair, 0.0, 0.3, 12, cap=1024)
