"""
Fixed-length source coding through testing against the counting measure.

With sigma = 1 on every sequence, beta[T] counts the accepted sequences
and alpha[T] is the probability of a decoding error, so codebooks and
deterministic tests are the same objects.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .classical import (
    ClassicalTest,
    FiniteMeasure,
    LLRSpectrum,
    evaluate_test,
    iid_spectrum,
)
from .errors import InputError
from .exponents import ExponentResult, hoeffding_tilted
from .rates import RateFunction, lower_tail_rate, upper_tail_rate

DEFAULT_GRID_POINTS = 2001


def _source(P):
    if not isinstance(P, FiniteMeasure) or not P.normalized:
        raise InputError("source must be a normalized FiniteMeasure")
    return P


def entropy(P):
    w = _source(P).weights
    w = w[w > 0]
    return -math.fsum(w * np.log(w))


def self_information_spectrum(P, n):
    """Law of -(1/n) log P(x^n), with counting masses as the sigma side.

    Points ascend in self-information; log_sigma holds the log number of
    sequences at each point.
    """
    P = _source(P)
    spec = iid_spectrum(P, FiniteMeasure.counting(P.size), n)
    live = spec.log_rho > -np.inf
    z = -spec.z[live][::-1]
    return LLRSpectrum(n, z + 0.0, spec.log_rho[live][::-1].copy(), spec.log_sigma[live][::-1].copy())


def _tails(spec):
    """P{z > z_k} for every point of the spectrum."""
    mass = np.exp(spec.log_rho)
    return mass, np.append(np.cumsum(mass[::-1])[::-1][1:], 0.0)


def finite_n_rate(P, epsilon, n):
    """inf{a : P{-(1/n) log P(X^n) > a} <= eps} from the exact spectrum."""
    if not 0.0 <= epsilon < 1.0:
        raise InputError("epsilon must lie in [0, 1)")
    spec = self_information_spectrum(P, n)
    _, tail = _tails(spec)
    return float(spec.z[np.flatnonzero(tail <= epsilon)[0]])


def greedy_codebook(P, epsilon, n):
    """Smallest codebook with error <= eps: sequences taken by decreasing probability.

    Returns (size, last self-information level used). Sequences of one
    level share a probability, so only the last level is cut.
    """
    if not 0.0 <= epsilon < 1.0:
        raise InputError("epsilon must lie in [0, 1)")
    spec = self_information_spectrum(P, n)
    mass, tail = _tails(spec)
    k = int(np.flatnonzero(tail <= epsilon)[0])
    counts = [int(round(math.exp(x))) for x in spec.log_sigma]
    missing = max(1.0 - epsilon - math.fsum(mass[:k]), 0.0)
    take = min(max(math.ceil(missing / math.exp(-n * spec.z[k]) - 1e-9), 1), counts[k])
    return sum(counts[:k]) + take, float(spec.z[k])


def _atoms(P):
    on = P.weights > 0
    lw = np.log(P.weights[on])
    return -lw, lw


def sigma_rates(P, a):
    """(sigma_lower(a), sigma_star_upper(a)) for an i.i.d. source.

    The upper and lower tail Cramer rates of the self-information. Beyond
    the support range [min -log P, max -log P] the value is +inf.
    """
    h, lw = _atoms(_source(P))
    return upper_tail_rate(h, lw, a).value, lower_tail_rate(h, lw, a).value


def information_range(P):
    h, _ = _atoms(_source(P))
    return float(np.min(h)), float(np.max(h))


def default_grid(P, points=DEFAULT_GRID_POINTS):
    lo, hi = information_range(P)
    if hi - lo < 1e-12:
        return np.linspace(lo - 0.5, hi + 0.5, points)
    return np.linspace(lo, hi, points)


def sigma_rate_tables(P, grid=None):
    grid = default_grid(P) if grid is None else np.asarray(grid, dtype=float)
    vals = [sigma_rates(P, a) for a in grid]
    return (
        RateFunction(grid, [v[0] for v in vals], "sigma_lower"),
        RateFunction(grid, [v[1] for v in vals], "sigma_star_upper"),
    )


def R_e(P, r, grid=None, lower: Optional[RateFunction] = None):
    """sup_a {a - sigma_lower(a) : sigma_lower(a) < r} on a grid."""
    if r <= 0:
        raise InputError("r must be positive")
    if lower is None:
        lower = sigma_rate_tables(P, grid)[0]
    a, s = lower.grid, lower.values
    ok = s < r
    if not ok.any():
        return ExponentResult(-math.inf, math.nan, "source-Re", ("empty constraint set",))
    vals = np.where(ok, a - s, -math.inf)
    i = int(np.argmax(vals))
    return ExponentResult(float(vals[i]), float(a[i]), "source-Re")


def R_e_tilted(P, r):
    """max{H(Q) : D(Q || P) <= r}, solved over the family Q proportional to P^{1+theta}."""
    return -hoeffding_tilted(_source(P), FiniteMeasure.counting(P.size), r)


def _star_table(P, grid, star):
    return sigma_rate_tables(P, grid)[1] if star is None else star


def R_e_star(P, r, grid=None, star: Optional[RateFunction] = None):
    """max{b0 - r, 0} with b0 = inf{a : sigma_star_upper(a) <= r} on the grid.

    The table is nonincreasing, so the last point above r and the first
    point at or below it bracket b0; the second is used and the first is
    kept in ``forms``. A precomputed table may be passed as ``star``.
    """
    if r < 0:
        raise InputError("r must be nonnegative")
    star = _star_table(P, grid, star)
    k = int(np.searchsorted(-star.values, -r, side="left"))
    b0 = float(star.grid[k]) if k < star.grid.size else math.inf
    b0_sup = float(star.grid[k - 1]) if k > 0 else -math.inf
    return ExponentResult(
        max(b0 - r, 0.0), b0, "source-Re-star", ("b0 grid-resolved",), {"b0_sup": b0_sup}
    )


def han_R_star(P, r, grid=None, star: Optional[RateFunction] = None, tol=1e-12):
    """inf{h >= 0 : inf_a {s(a) + [a - s(a) - h]_+} <= r} with s = sigma_star_upper on the grid."""
    star = _star_table(P, grid, star)
    a, s = star.grid, star.values

    def phi(h):
        with np.errstate(invalid="ignore"):
            v = s + np.maximum(a - s - h, 0.0)
        return float(np.min(np.where(np.isnan(v), math.inf, v)))

    if phi(0.0) <= r:
        return 0.0
    hi = float(a[-1] - a[0]) + 1.0
    while phi(hi) > r:
        hi *= 2.0
        if hi > 1e6:
            return math.inf
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi(mid) <= r:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class CodingSystem:
    codebook: Tuple[int, ...]
    size: int

    def __post_init__(self):
        book = tuple(int(i) for i in self.codebook)
        if len(set(book)) != len(book):
            raise InputError("codebook indices must be distinct")
        if self.size != len(book):
            raise InputError("size must equal the codebook length")
        object.__setattr__(self, "codebook", book)

    def error(self, Pn: FiniteMeasure):
        """Probability that the source emits a sequence outside the codebook."""
        keep = np.zeros(Pn.size, dtype=bool)
        keep[list(self.codebook)] = True
        return math.fsum(Pn.weights * (1.0 - keep))


def test_to_code(test: ClassicalTest):
    if not test.deterministic:
        raise InputError("only deterministic tests define a codebook")
    region = test.region
    return CodingSystem(tuple(region.tolist()), int(region.size))


def code_to_test(code: CodingSystem, alphabet_size):
    t = np.zeros(alphabet_size)
    if code.codebook and max(code.codebook) >= alphabet_size:
        raise InputError("codebook index outside the alphabet")
    t[list(code.codebook)] = 1.0
    return ClassicalTest(t)


@dataclass(frozen=True)
class Reduction:
    code: CodingSystem
    test: ClassicalTest
    gamma: float
    alpha: float
    beta: float

    @property
    def exact(self):
        return self.gamma == self.alpha and self.beta == self.code.size


def code_test_reduction(P, test: ClassicalTest, n):
    """Map a deterministic test on n-sequences to a code and back.

    gamma[code] equals alpha[test] and |code| equals beta[test] when
    sigma is the counting measure; both are returned for checking.
    """
    P = _source(P)
    Pn = P.iid_power(n)
    if test.accept.size != Pn.size:
        raise InputError(f"test acts on {test.accept.size} letters, expected {Pn.size}")
    code = test_to_code(test)
    back = code_to_test(code, Pn.size)
    ev = evaluate_test(Pn, FiniteMeasure.counting(Pn.size), back, n=n)
    return Reduction(code, back, code.error(Pn), ev.alpha, ev.beta)


@dataclass(frozen=True)
class SourceRateReport:
    H_upper: float
    H_lower: float
    R_eps_table: List[Tuple[float, int, float]]
    R_e: List[Tuple[float, ExponentResult]]
    R_e_star: List[Tuple[float, ExponentResult]]
    sigma_lower: RateFunction
    sigma_star_upper: RateFunction


def source_report(P, eps_list, n_list, r_list, grid=None):
    """Finite-n optimal rates plus the i.i.d. exponents on one grid.

    For an i.i.d. source the spectral sup- and inf-entropy rates are both
    H(P); the finite-n table shows the approach.
    """
    H = entropy(P)
    table = [(float(e), int(n), finite_n_rate(P, e, n)) for e in eps_list for n in n_list]
    lower, star = sigma_rate_tables(P, grid)
    re = [(float(r), R_e(P, r, lower=lower)) for r in r_list if r > 0]
    rs = [(float(r), R_e_star(P, r, star=star)) for r in r_list]
    return SourceRateReport(H, H, table, re, rs, lower, star)


def convexity_violation(rate: RateFunction):
    """Largest negative second difference over the finite part (0 if convex)."""
    v = rate.values
    a = rate.grid
    fin = np.isfinite(v)
    v, a = v[fin], a[fin]
    if v.size < 3:
        return 0.0
    slopes = np.diff(v) / np.diff(a)
    return float(max(0.0, -np.min(np.diff(slopes))))

