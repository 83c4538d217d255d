import math

import numpy as np
import pytest

from infospec.classical import ClassicalTest, FiniteMeasure, deterministic_tests
from infospec.errors import InputError
from infospec.source import (
    CodingSystem,
    R_e,
    R_e_star,
    R_e_tilted,
    code_test_reduction,
    code_to_test,
    convexity_violation,
    entropy,
    finite_n_rate,
    greedy_codebook,
    han_R_star,
    information_range,
    self_information_spectrum,
    sigma_rate_tables,
    sigma_rates,
    source_report,
    test_to_code as code_from_test,
)


@pytest.fixture(scope="module")
def P():
    return FiniteMeasure([0.7, 0.3])


@pytest.fixture(scope="module")
def tables(P):
    return sigma_rate_tables(P)


def brute_min_codebook(P, eps, n):
    """Smallest codebook with error <= eps by sorting all sequences."""
    probs = sorted(P.iid_power(n).weights, reverse=True)
    total = 0.0
    for k, p in enumerate(probs, 1):
        total += p
        if 1.0 - total <= eps + 1e-12:
            return k
    return len(probs)


class TestSpectrum:
    def test_counts(self, P):
        spec = self_information_spectrum(P, 3)
        assert [round(math.exp(x)) for x in spec.log_sigma] == [1, 3, 3, 1]
        assert np.all(np.diff(spec.z) > 0)
        assert spec.z[0] == pytest.approx(-math.log(0.7))

    def test_entropy_and_range(self, P):
        assert entropy(P) == pytest.approx(-(0.7 * math.log(0.7) + 0.3 * math.log(0.3)))
        lo, hi = information_range(P)
        assert (lo, hi) == pytest.approx((-math.log(0.7), -math.log(0.3)))

    def test_rejects_unnormalized(self):
        with pytest.raises(InputError):
            entropy(FiniteMeasure.counting(2))


class TestFiniteN:
    @pytest.mark.parametrize("n", [1, 4, 10])
    @pytest.mark.parametrize("eps", [0.05, 0.1, 0.4])
    def test_greedy_matches_sorting(self, P, n, eps):
        size, level = greedy_codebook(P, eps, n)
        assert size == brute_min_codebook(P, eps, n)
        assert level == finite_n_rate(P, eps, n)

    def test_rate_approaches_entropy(self, P):
        gaps = [abs(finite_n_rate(P, 0.1, n) - entropy(P)) for n in (10, 100, 1000)]
        assert gaps[-1] < gaps[0] and gaps[-1] < 0.05

    def test_epsilon_range(self, P):
        with pytest.raises(InputError):
            finite_n_rate(P, 1.0, 3)


class TestExponents:
    def test_sigma_rates_zero_at_entropy(self, P):
        lo, hi = sigma_rates(P, entropy(P))
        assert lo == pytest.approx(0.0, abs=1e-12) and hi == pytest.approx(0.0, abs=1e-12)
        assert sigma_rates(P, 0.0)[1] == math.inf

    def test_convex_tables(self, tables):
        for t in tables:
            assert convexity_violation(t) < 1e-9

    def test_R_e_limits(self, P, tables):
        lower, _ = tables
        assert R_e(P, 1e-12, lower=lower).value == pytest.approx(entropy(P), abs=lower.tolerance)
        assert R_e(P, 10.0, lower=lower).value == pytest.approx(math.log(2))
        with pytest.raises(InputError):
            R_e(P, 0.0, lower=lower)

    @pytest.mark.parametrize("r", [0.01, 0.05, 0.1])
    def test_R_e_tilted(self, P, tables, r):
        assert R_e(P, r, lower=tables[0]).value == pytest.approx(R_e_tilted(P, r), abs=1e-3)

    def test_R_e_star_matches_han(self, P, tables):
        star = tables[1]
        for r in np.linspace(0, 0.8, 41):
            got = R_e_star(P, r, star=star)
            assert got.value == pytest.approx(han_R_star(P, r, star=star), abs=star.tolerance)
            assert got.forms["b0_sup"] <= got.optimizer

    def test_R_e_star_zero_rate(self, P, tables):
        # the lower-tail rate of the self-information vanishes from H upwards
        assert R_e_star(P, 0.0, star=tables[1]).value == pytest.approx(entropy(P), abs=tables[1].tolerance)

    def test_report(self, P):
        rep = source_report(P, [0.1], [10, 100], [0.0, 0.05], grid=np.linspace(0.3, 1.3, 201))
        assert rep.H_upper == rep.H_lower == pytest.approx(entropy(P))
        assert len(rep.R_eps_table) == 2 and len(rep.R_e) == 1 and len(rep.R_e_star) == 2


class TestReduction:
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_round_trip_exhaustive(self, P, n):
        for t in deterministic_tests(2**n):
            red = code_test_reduction(P, t, n)
            assert red.exact
            assert np.array_equal(red.test.accept, t.accept)

    def test_codebook_validation(self):
        with pytest.raises(InputError):
            CodingSystem((0, 0), 2)
        with pytest.raises(InputError):
            CodingSystem((0, 1), 3)
        with pytest.raises(InputError):
            code_to_test(CodingSystem((5,), 1), 4)

    def test_randomized_test_has_no_code(self):
        with pytest.raises(InputError):
            code_from_test(ClassicalTest([0.5, 1.0]))

    def test_error_is_complement_mass(self, P):
        Pn = P.iid_power(2)
        code = CodingSystem((3,), 1)
        assert code.error(Pn) == pytest.approx(1 - 0.09)

    def test_wrong_alphabet(self, P):
        with pytest.raises(InputError):
            code_test_reduction(P, ClassicalTest([1, 0, 1]), 2)
