import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from infospec.classical import (
    ClassicalTest,
    FiniteMeasure,
    as_measure,
    classical_np_test,
    classical_psi,
    deterministic_tests,
    evaluate_test,
    iid_spectrum,
    kl_divergence,
    spectrum_alpha_beta,
    tilted_measure,
    truncate_acceptance_region,
)
from infospec.errors import InputError, SizeError


@pytest.fixture
def coin_pair():
    return FiniteMeasure([0.3, 0.7]), FiniteMeasure([0.6, 0.4])


def brute_alpha_beta(rho, sigma, n, a, tie):
    """alpha, beta of S_n(a) by enumerating all m^n sequences."""
    alpha = beta = 0.0
    for seq in itertools.product(range(rho.size), repeat=n):
        r = math.prod(rho.weights[i] for i in seq)
        s = math.prod(sigma.weights[i] for i in seq)
        thr = math.exp(n * a) * s
        accept = r > thr * (1 + 1e-12) if tie == "strict" else r >= thr * (1 - 1e-12)
        alpha += 0.0 if accept else r
        beta += s if accept else 0.0
    return alpha, beta


class TestFiniteMeasure:
    def test_validation(self):
        with pytest.raises(InputError):
            FiniteMeasure([0.5, 0.6])
        with pytest.raises(InputError):
            FiniteMeasure([-0.1, 1.1])
        with pytest.raises(InputError):
            FiniteMeasure([])

    def test_counting_and_power(self):
        c = FiniteMeasure.counting(3)
        assert not c.normalized and c.total == 3
        p = FiniteMeasure([0.25, 0.75]).iid_power(2)
        assert_allclose(p.weights, [1 / 16, 3 / 16, 3 / 16, 9 / 16])

    def test_as_measure_detects_normalization(self):
        assert as_measure([0.5, 0.5]).normalized
        assert not as_measure([1.0, 1.0]).normalized


class TestLikelihoodTest:
    def test_ties(self):
        rho, sigma = FiniteMeasure([0.5, 0.5]), FiniteMeasure([0.5, 0.5])
        assert_allclose(classical_np_test(rho, sigma, 0.0).accept, [0, 0])
        assert_allclose(classical_np_test(rho, sigma, 0.0, tie="nonstrict").accept, [1, 1])
        assert_allclose(classical_np_test(rho, sigma, 0.0, tie="randomized", p=0.25).accept, [0.25, 0.25])
        with pytest.raises(InputError):
            classical_np_test(rho, sigma, 0.0, tie="randomized")

    def test_sigma_zero_letters_always_accepted(self):
        rho, sigma = FiniteMeasure([0.5, 0.5]), FiniteMeasure([1.0, 0.0])
        assert_allclose(classical_np_test(rho, sigma, 50.0).accept, [0, 1])

    def test_evaluation(self, coin_pair):
        rho, sigma = coin_pair
        ev = evaluate_test(rho, sigma, ClassicalTest([0, 1]))
        assert_allclose([ev.alpha, ev.beta, ev.beta_c], [0.3, 0.4, 0.6])
        assert ev.zeta == pytest.approx(-math.log(0.4))

    def test_randomized_test_range(self):
        with pytest.raises(InputError):
            ClassicalTest([1.5, 0.0])


class TestSpectrum:
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    @pytest.mark.parametrize("tie", ["strict", "nonstrict"])
    def test_matches_enumeration(self, coin_pair, n, tie):
        rho, sigma = coin_pair
        spec = iid_spectrum(rho, sigma, n)
        for a in np.linspace(-1, 1, 9):
            ev = spectrum_alpha_beta(spec, a, tie)
            assert_allclose([ev.alpha, ev.beta], brute_alpha_beta(rho, sigma, n, a, tie), atol=1e-14)

    def test_masses_sum_to_one(self):
        rho, sigma = FiniteMeasure([0.2, 0.3, 0.5]), FiniteMeasure([0.5, 0.25, 0.25])
        spec = iid_spectrum(rho, sigma, 30)
        assert_allclose(spec.rho_mass.sum(), 1.0)
        assert_allclose(spec.sigma_mass.sum(), 1.0)
        assert np.all(np.diff(spec.z) > 0)

    def test_large_n_stays_in_log_domain(self, coin_pair):
        spec = iid_spectrum(*coin_pair, 5000)
        ev = spectrum_alpha_beta(spec, 0.3)
        assert ev.beta == 0.0 and math.isfinite(ev.log_beta)
        assert ev.zeta > 0.3

    def test_infinite_points(self):
        spec = iid_spectrum(FiniteMeasure([0.5, 0.5, 0.0]), FiniteMeasure([0.5, 0.0, 0.5]), 2)
        assert spec.z[0] == -np.inf and spec.z[-1] == np.inf

    def test_type_cap(self, coin_pair):
        with pytest.raises(SizeError):
            iid_spectrum(*coin_pair, 100, cap=50)


class TestDivergenceAndPsi:
    def test_kl(self, coin_pair):
        rho, sigma = coin_pair
        want = 0.3 * math.log(0.5) + 0.7 * math.log(0.7 / 0.4)
        assert kl_divergence(rho, sigma) == pytest.approx(want)
        assert kl_divergence(FiniteMeasure([0.5, 0.5]), FiniteMeasure([1.0, 0.0])) == math.inf

    def test_psi_derivative_is_divergence(self, coin_pair):
        h = 1e-6
        d = (classical_psi(*coin_pair, h) - classical_psi(*coin_pair, -h)) / (2 * h)
        assert d == pytest.approx(kl_divergence(*coin_pair), rel=1e-6)
        assert classical_psi(*coin_pair, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_tilted_endpoints(self, coin_pair):
        rho, sigma = coin_pair
        assert_allclose(tilted_measure(rho, sigma, 0.0).weights, rho.weights)
        assert_allclose(tilted_measure(rho, sigma, -1.0).weights, sigma.weights)


class TestDeterministic:
    def test_enumeration(self):
        tests = list(deterministic_tests(3))
        assert len(tests) == 8
        assert len({tuple(t.accept) for t in tests}) == 8

    def test_truncation(self):
        rho = FiniteMeasure([0.1, 0.4, 0.4, 0.1])
        t = truncate_acceptance_region(ClassicalTest([1, 1, 1, 1]), rho, 3)
        assert_allclose(t.accept, [1, 1, 1, 0])
        with pytest.raises(InputError):
            truncate_acceptance_region(ClassicalTest([0.5, 1, 1, 1]), rho, 1)
