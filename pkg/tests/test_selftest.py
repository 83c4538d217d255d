import math

import numpy as np
import pytest

from infospec.errors import PropertyFailure, SizeError
from infospec.selftest import (
    EXAMPLE_RHO,
    EXAMPLE_SIGMA,
    _prop,
    beta_bound_slack,
    oracle_gap,
    random_density,
    random_quantum_test,
    report,
    run_selftest,
)


class TestGenerators:
    def test_density(self, rng):
        for d in (2, 3, 5):
            rho = random_density(rng, d)
            assert np.trace(rho).real == pytest.approx(1.0)
            assert np.linalg.eigvalsh(rho)[0] > -1e-14

    def test_rank(self, rng):
        rho = random_density(rng, 4, rank=1)
        assert np.sum(np.linalg.eigvalsh(rho) > 1e-12) == 1

    def test_quantum_test_range(self, rng):
        w = np.linalg.eigvalsh(random_quantum_test(rng, 4))
        assert w[0] >= -1e-12 and w[-1] <= 1 + 1e-12


class TestProperties:
    def test_oracle_gap(self):
        grid = np.linspace(-0.5, 1.0, 5)
        assert oracle_gap(EXAMPLE_RHO, EXAMPLE_SIGMA, [3, 6], grid) < 1e-10
        assert oracle_gap(EXAMPLE_RHO, EXAMPLE_SIGMA, [3], grid, corrupt=True) > 1e-3

    def test_beta_bound(self):
        assert beta_bound_slack(EXAMPLE_RHO, EXAMPLE_SIGMA, [4], np.linspace(0, 1, 5)) >= 0

    def test_prop_statuses(self):
        def raise_size():
            raise SizeError("too big", size=10)

        def raise_fail():
            raise PropertyFailure("broken")

        assert _prop("a", lambda: 1.0, 0.0).status == "pass"
        assert _prop("b", lambda: -1.0, 0.0).status == "fail"
        assert _prop("c", raise_size, 0.0).status == "skipped"
        assert _prop("d", raise_fail, 0.0).worst_residual == -math.inf


class TestSuite:
    def test_default_passes(self):
        results = run_selftest(seed=3, fuzz_trials=20)
        rep = report(results, {"seed": 3})
        assert rep["passed"], [r for r in rep["properties"] if r["status"] == "fail"]
        assert {r.status for r in results} == {"pass"}

    def test_corrupt_fails(self):
        results = run_selftest(seed=3, corrupt=True, cap=16, fuzz_trials=5)
        assert not report(results, {})["passed"]
