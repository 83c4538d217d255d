import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from infospec.errors import InputError, SizeError
from infospec.operators import tensor_power
from infospec.quantum import BruteForceOracle
from infospec.schur import (
    build_decomposition,
    fast_iid_evaluations,
    g_curve,
    half_crossing,
    multiplicity,
    read_cached_matrix,
    sym_power_matrix,
    write_cached_matrix,
)
from infospec.selftest import random_qubit_pair


class TestDecomposition:
    @pytest.mark.parametrize("n", [1, 2, 5, 8])
    def test_dimension_count(self, example_pair, n):
        dec = build_decomposition(*example_pair, n)
        assert dec.dimension() == 2**n
        assert sum(multiplicity(n, b.k) for b in dec.blocks) == math.comb(n, n // 2)

    def test_log_trace_is_zero(self, example_pair):
        for n in (3, 50, 200):
            dec = build_decomposition(*example_pair, n)
            assert dec.log_trace("rho") == pytest.approx(0.0, abs=1e-10)
            assert dec.log_trace("sigma") == pytest.approx(0.0, abs=1e-10)

    def test_sym_power_trace(self, rng):
        g = rng.normal(size=(2, 2))
        x = g @ g.T
        w = np.linalg.eigvalsh(x)
        for m in range(5):
            want = sum(w[0] ** i * w[1] ** (m - i) for i in range(m + 1))
            assert np.trace(sym_power_matrix(x, m)) == pytest.approx(want)

    def test_rejects_non_qubit_and_exact_range(self, example_pair):
        with pytest.raises(InputError):
            build_decomposition(np.eye(3) / 3, np.eye(3) / 3, 2)
        with pytest.raises(SizeError):
            build_decomposition(*example_pair, 60, exact=True)


class TestFastPath:
    @pytest.mark.parametrize("n", [2, 4, 7])
    def test_matches_bruteforce(self, rng, n):
        for rho, sigma in [random_qubit_pair(rng) for _ in range(3)]:
            dec = build_decomposition(rho, sigma, n)
            oracle = BruteForceOracle(rho, sigma, n)
            for a in np.linspace(-0.5, 1.0, 7):
                fast, brute = fast_iid_evaluations(dec, a), oracle.evaluate(a)
                for m in ("strict", "nonstrict"):
                    assert fast[m].g == pytest.approx(brute[m].g, abs=1e-10)
                    assert fast[m].evaluation.beta == pytest.approx(brute[m].evaluation.beta, rel=1e-8, abs=1e-300)

    def test_corrupt_is_detected(self, example_pair):
        good = fast_iid_evaluations(build_decomposition(*example_pair, 4), 0.3)["strict"].g
        bad = fast_iid_evaluations(build_decomposition(*example_pair, 4, corrupt=True), 0.3)["strict"].g
        assert abs(good - bad) > 1e-3

    def test_commuting_pair(self):
        rho, sigma = np.diag([0.7, 0.3]), np.diag([0.4, 0.6])
        dec = build_decomposition(rho, sigma, 6)
        r = fast_iid_evaluations(dec, 0.1)["strict"]
        want = BruteForceOracle(rho, sigma, 6).evaluate(0.1)["strict"]
        assert r.g == pytest.approx(want.g, abs=1e-12)


class TestCurves:
    def test_g_curve_shape(self, example_pair):
        rows = g_curve(*example_pair, [5, 15], np.linspace(0, 0.8, 9))
        assert [r.n for r in rows] == [5] * 9 + [15] * 9
        for r in rows:
            assert 0.0 <= r.g <= 1.0
            assert r.g + r.alpha == pytest.approx(1.0)

    def test_threads_are_deterministic(self, example_pair):
        grid = np.linspace(0, 0.8, 17)
        assert g_curve(*example_pair, [20], grid) == g_curve(*example_pair, [20], grid, threads=3)

    def test_half_crossing_n5(self, example_pair):
        assert half_crossing(build_decomposition(*example_pair, 5), 0.0, 0.8) == pytest.approx(0.42127, abs=1e-5)

    def test_half_crossing_needs_bracket(self, example_pair):
        with pytest.raises(InputError):
            half_crossing(build_decomposition(*example_pair, 5), 0.6, 0.8)


class TestCache:
    def test_round_trip(self, tmp_path, rng):
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        path = tmp_path / "m.bin"
        write_cached_matrix(path, m)
        assert_allclose(read_cached_matrix(path), m)

    def test_cache_dir_gives_same_blocks(self, tmp_path, example_pair):
        a = build_decomposition(*example_pair, 9)
        b = build_decomposition(*example_pair, 9, cache_dir=str(tmp_path))
        c = build_decomposition(*example_pair, 9, cache_dir=str(tmp_path))
        assert any(tmp_path.iterdir())
        for x, y, z in zip(a.blocks, b.blocks, c.blocks):
            assert_allclose(x.block_rho, y.block_rho)
            assert_allclose(y.block_sigma, z.block_sigma)

    def test_tensor_power_reference(self, example_pair):
        rho, _ = example_pair
        dec = build_decomposition(*example_pair, 3)
        assert dec.dimension() == tensor_power(rho, 3).shape[0]
