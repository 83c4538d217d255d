"""
Seeded property suite behind ``infospec selftest``.

Each property reports pass, fail or skipped together with its worst
residual. Residuals are signed so that a negative number is a violation.
"""
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable, List

import numpy as np

from .classical import (
    ClassicalTest,
    FiniteMeasure,
    classical_np_test,
    deterministic_tests,
    evaluate_test,
    iid_spectrum,
    kl_divergence,
    spectrum_alpha_beta,
)
from .errors import PropertyFailure, SizeError
from .exponents import (
    B_e_from_rates,
    B_e_star_from_rates,
    han_kobayashi_exponent,
    han_kobayashi_tilted,
    hoeffding_exponent,
    hoeffding_tilted,
    random_atom_model,
    b_e_forms_agree,
)
from .operators import DEFAULT_BRUTE_CAP
from .quantum import (
    MODES,
    BruteForceOracle,
    evaluate_quantum_test,
    np_fuzz_residuals,
    quantum_np_projection,
)
from .rates import classical_eta_rate, classical_zeta_c_rate, cramer_rates, grid_tolerance
from .schur import build_decomposition, fast_iid_evaluations
from .source import code_test_reduction

EXAMPLE_RHO = np.array([[0.75, 0.35], [0.35, 0.25]])
EXAMPLE_SIGMA = np.diag([0.9, 0.1])
FUZZ_ATOL = 1e-9
ORACLE_ATOL = 1e-9


def random_density(rng, d, rank=None):
    """Random density matrix from a complex Ginibre draw (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    m = g @ g.conj().T
    return (m + m.conj().T) / (2 * np.trace(m).real)


def random_qubit_pair(rng):
    return random_density(rng, 2), random_density(rng, 2)


def random_quantum_test(rng, d):
    """0 <= T <= I with random eigenbasis and eigenvalues."""
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, _ = np.linalg.qr(g)
    t = (q * rng.uniform(0, 1, d)) @ q.conj().T
    return (t + t.conj().T) / 2


def random_binary_pair(rng, lo=0.02, hi=0.98):
    p, q = rng.uniform(lo, hi, 2)
    return FiniteMeasure([p, 1 - p]), FiniteMeasure([q, 1 - q])


def random_measure(rng, m):
    w = rng.dirichlet(np.ones(m))
    return FiniteMeasure(w / math.fsum(w))


@dataclass
class PropertyResult:
    name: str
    status: str
    worst_residual: float
    detail: str = ""
    seconds: float = 0.0


def quantum_np_fuzz(rng, trials=1000):
    """Worst slack of the four likelihood-test inequalities against random quantum tests."""
    worst = math.inf
    for _ in range(trials):
        d = int(rng.integers(2, 5))
        rho, sigma = random_density(rng, d), random_density(rng, d)
        a = float(rng.uniform(-2, 2))
        mode = MODES[int(rng.integers(2))]
        s = quantum_np_projection(rho, sigma, a, mode=mode)
        t = random_quantum_test(rng, d)
        e = math.exp(a)
        res = np_fuzz_residuals(evaluate_quantum_test(rho, sigma, s), evaluate_quantum_test(rho, sigma, t), e)
        worst = min(worst, min(res))
    return worst


def classical_np_fuzz(rng, trials=1000):
    """The same inequalities for random randomized classical tests."""
    worst = math.inf
    for _ in range(trials):
        m = int(rng.integers(2, 7))
        rho, sigma = random_measure(rng, m), random_measure(rng, m)
        a = float(rng.uniform(-2, 2))
        tie = ("strict", "nonstrict")[int(rng.integers(2))]
        s = classical_np_test(rho, sigma, a, tie=tie)
        t = ClassicalTest(rng.uniform(0, 1, m))
        res = np_fuzz_residuals(evaluate_test(rho, sigma, s), evaluate_test(rho, sigma, t), math.exp(a))
        worst = min(worst, min(res))
    return worst


def oracle_gap(rho, sigma, n_list, a_grid, corrupt=False, cap=DEFAULT_BRUTE_CAP):
    """max |g_fast - g_brute| over n, a and both modes."""
    worst = 0.0
    for n in n_list:
        dec = build_decomposition(rho, sigma, n, corrupt=corrupt)
        oracle = BruteForceOracle(rho, sigma, n, cap=cap)
        for a in a_grid:
            fast = fast_iid_evaluations(dec, a, MODES)
            brute = oracle.evaluate(a, MODES)
            for m in MODES:
                worst = max(worst, abs(fast[m].g - brute[m].g))
    return worst


def beta_bound_slack(rho, sigma, n_list, a_grid):
    """min over the grid of zeta_n(a) - a (beta_n(a) <= e^{-na} means >= 0)."""
    worst = math.inf
    for n in n_list:
        if isinstance(rho, FiniteMeasure):
            spec = iid_spectrum(rho, sigma, n)
            evs = [spectrum_alpha_beta(spec, a, m) for a in a_grid for m in MODES]
            pts = [a for a in a_grid for _ in MODES]
        else:
            dec = build_decomposition(rho, sigma, n)
            evs, pts = [], []
            for a in a_grid:
                for r in fast_iid_evaluations(dec, a, MODES).values():
                    evs.append(r.evaluation)
                    pts.append(a)
        for a, ev in zip(pts, evs):
            # compare on the linear scale, where e^{-na} carries the rounding of the test
            worst = min(worst, math.exp(-n * a) * (1 + 1e-12) - ev.beta)
    return worst


def _prop(name, fn: Callable[[], float], threshold, skip_reason=None):
    if skip_reason:
        return PropertyResult(name, "skipped", math.nan, skip_reason)
    t0 = time.perf_counter()
    try:
        worst = float(fn())
    except SizeError as exc:
        return PropertyResult(name, "skipped", math.nan, f"resource cap: {exc}")
    except PropertyFailure as exc:
        return PropertyResult(name, "fail", -math.inf, str(exc), time.perf_counter() - t0)
    status = "pass" if worst >= threshold else "fail"
    return PropertyResult(name, status, worst, "", time.perf_counter() - t0)


def run_selftest(seed=0, corrupt=False, cap=DEFAULT_BRUTE_CAP, fuzz_trials=200, quick=True) -> List[PropertyResult]:
    """Run the property suite. Every residual is arranged so that >= threshold passes."""
    rng = np.random.default_rng(seed)
    results = []
    results.append(_prop("np_fuzz_quantum", lambda: quantum_np_fuzz(rng, fuzz_trials), -FUZZ_ATOL))
    results.append(_prop("np_fuzz_classical", lambda: classical_np_fuzz(rng, fuzz_trials), -FUZZ_ATOL))

    n_max = 6 if quick else 10
    n_ok = [n for n in range(1, n_max + 1) if 2**n <= cap]
    a_grid = np.linspace(-0.5, 1.0, 11 if quick else 21)
    pairs = [(EXAMPLE_RHO, EXAMPLE_SIGMA)] + [random_qubit_pair(rng) for _ in range(2 if quick else 20)]

    def oracle():
        return -max(oracle_gap(r, s, n_ok, a_grid, corrupt=corrupt, cap=cap) for r, s in pairs)

    results.append(
        _prop("schur_vs_bruteforce", oracle, -ORACLE_ATOL, None if n_ok else f"cap {cap} admits no n")
    )

    def beta_bound():
        cl = random_binary_pair(rng)
        return min(
            beta_bound_slack(EXAMPLE_RHO, EXAMPLE_SIGMA, [1, 5, 15], a_grid),
            beta_bound_slack(cl[0], cl[1], [1, 10, 100], a_grid),
        )

    results.append(_prop("beta_bound", beta_bound, 0.0))

    def zeta_c_gate():
        rho, sigma = FiniteMeasure([0.3, 0.7]), FiniteMeasure([0.6, 0.4])
        lo = -kl_divergence(sigma, rho)
        worst = math.inf
        for n in (200, 500, 1000):
            spec = iid_spectrum(rho, sigma, n)
            allow = 2 * math.log(n) / n
            for a in np.linspace(lo - 0.3, kl_divergence(rho, sigma), 7):
                ev = spectrum_alpha_beta(spec, a)
                for got, want in ((ev.zeta_c, classical_zeta_c_rate(rho, sigma, a)), (ev.eta, classical_eta_rate(rho, sigma, a))):
                    gap = got - want
                    worst = min(worst, gap + 1e-9, allow - gap)
        return worst

    results.append(_prop("cramer_vs_type_classes", zeta_c_gate, 0.0))

    def dual_forms():
        g = np.linspace(-2, 2, 81)
        tol = grid_tolerance(g)
        bad = 0
        for _ in range(50 if quick else 200):
            model = random_atom_model(rng, g)
            e, z, zc = model.eta(g), model.zeta(g), model.zeta_c(g)
            for r in (0.0, 0.05, 0.2, 0.5, 1.0):
                bad += not b_e_forms_agree(B_e_from_rates(e, z, r), tol)
                B_e_star_from_rates(zc, r)
        grid = np.linspace(-3, 3, 301)
        tol = grid_tolerance(grid)
        for _ in range(5 if quick else 50):
            rho, sigma = random_binary_pair(rng)
            eta, zeta, _ = cramer_rates(rho, sigma, grid)
            for r in (0.02, 0.1, 0.3):
                bad += not b_e_forms_agree(B_e_from_rates(eta, zeta, r), tol)
        return -bad

    results.append(_prop("dual_forms", dual_forms, 0.0))

    def hoeffding():
        worst = 0.0
        for _ in range(5 if quick else 50):
            rho, sigma = random_binary_pair(rng)
            dsr = kl_divergence(sigma, rho)
            for r in np.linspace(0.01, 0.5, 10):
                worst = max(worst, abs(hoeffding_exponent(rho, sigma, r).value - hoeffding_tilted(rho, sigma, r)))
                hk = han_kobayashi_exponent(rho, sigma, r).value
                if r <= dsr:
                    worst = max(worst, abs(hk))
                else:
                    worst = max(worst, abs(hk - han_kobayashi_tilted(rho, sigma, r)))
        return -worst

    results.append(_prop("hoeffding_duality", hoeffding, -1e-6))

    def round_trip():
        P = FiniteMeasure([0.7, 0.3])
        bad = 0
        for n in (1, 2, 3):
            for t in deterministic_tests(2**n):
                bad += not code_test_reduction(P, t, n).exact
        return -bad

    results.append(_prop("code_test_round_trip", round_trip, 0.0))
    return results


def report(results: List[PropertyResult], config: dict):
    return {
        "passed": all(r.status != "fail" for r in results),
        "properties": [asdict(r) for r in results],
        "config": config,
    }
