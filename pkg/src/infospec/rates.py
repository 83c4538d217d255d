"""
Rate functions: exact finite-n samples and i.i.d. Cramer transforms.

A rate is represented either as a table over an a-grid built from exact
finite-n error probabilities, or through the Legendre transform of the
cumulant generating function of the per-letter log-likelihood ratio.
Atoms may sit at z = +inf or -inf (mass off the other measure's support);
their treatment follows the limits of e^{tz} as t moves away from 0.
"""
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .classical import (
    FiniteMeasure,
    LLRSpectrum,
    _lse,
    iid_spectrum,
    kl_divergence,
    spectrum_alpha_beta,
)
from .errors import InputError
from .operators import DEFAULT_BRUTE_CAP
from .quantum import MODES, BruteForceOracle, quantum_relative_entropy
from .schur import build_decomposition, fast_iid_evaluation

RATE_KINDS = ("eta_lower", "zeta_lower", "zeta_c_upper", "sigma_lower", "sigma_star_upper")
NONINCREASING = frozenset({"eta_lower", "zeta_c_upper", "sigma_star_upper"})
GRID_ATOL = 1e-9
TILT_MAX = 1e6


def grid_tolerance(grid):
    """One grid step: the largest spacing plus 1e-9."""
    grid = np.asarray(grid, dtype=float)
    return (float(np.max(np.diff(grid))) if grid.size > 1 else 0.0) + GRID_ATOL


@dataclass(frozen=True)
class RateFunction:
    grid: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        g = np.array(self.grid, dtype=float, copy=True).reshape(-1)
        v = np.array(self.values, dtype=float, copy=True).reshape(-1)
        if g.size == 0 or g.size != v.size:
            raise InputError("rate function needs a nonempty grid with one value per point")
        if np.any(np.diff(g) <= 0) or not np.all(np.isfinite(g)):
            raise InputError("rate grid must be finite and strictly ascending")
        if np.any(np.isnan(v)):
            raise InputError("rate values must not be NaN")
        if self.kind not in RATE_KINDS:
            raise InputError(f"unknown rate kind {self.kind!r}")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def tolerance(self):
        return grid_tolerance(self.grid)

    def monotonicity_violation(self):
        """Largest step against the kind's direction (0 when monotone)."""
        v = self.values
        if v.size < 2:
            return 0.0
        with np.errstate(invalid="ignore"):
            d = np.diff(v) if self.kind in NONINCREASING else -np.diff(v)
        d = np.where(np.isnan(d), 0.0, d)
        return float(max(0.0, np.max(d)))


class LegendreValue(NamedTuple):
    value: float
    t: float  # optimizing tilt; -inf/+inf when approached at the end of the support


def _finite_part(z, logw):
    z = np.asarray(z, dtype=float)
    logw = np.asarray(logw, dtype=float)
    live = logw > -np.inf
    return z[live], logw[live]


def _tilted_mean(z, logw, t):
    x = logw + t * z
    p = np.exp(x - np.max(x))
    return float(np.dot(p, z) / np.sum(p))


def lower_tail_rate(z, logw, a):
    """sup_{t <= 0} (t a - log sum_i w_i e^{t z_i}).

    The exponential rate of W^n{mean of z <= a}. Atoms at +inf drop out for
    t < 0; an atom at -inf makes every t < 0 useless, leaving t = 0.
    """
    z, logw = _finite_part(z, logw)
    if z.size == 0:
        return LegendreValue(math.inf, -math.inf)
    if np.any(z == -np.inf):
        return LegendreValue(-_lse(logw), 0.0)
    fin = np.isfinite(z)
    zf, lf = z[fin], logw[fin]
    if zf.size == 0:
        return LegendreValue(math.inf, -math.inf)
    log_total = _lse(lf)
    if abs(log_total) <= 1e-12:
        log_total = 0.0  # unit mass up to rounding
    zmin = float(np.min(zf))
    if a >= _tilted_mean(zf, lf, 0.0):
        return LegendreValue(-log_total + 0.0, 0.0)
    tol = 1e-12 * max(1.0, abs(zmin))
    if a < zmin - tol:
        return LegendreValue(math.inf, -math.inf)
    if a <= zmin + tol:
        return LegendreValue(-_lse(lf[np.abs(zf - zmin) <= tol]), -math.inf)
    lo = -1.0
    while _tilted_mean(zf, lf, lo) > a:
        lo *= 2.0
        if lo < -TILT_MAX:
            return LegendreValue(-_lse(lf[np.abs(zf - zmin) <= tol]), -math.inf)
    t = brentq(lambda s: _tilted_mean(zf, lf, s) - a, lo, 0.0, xtol=1e-14, rtol=1e-15)
    # t = 0 is admissible, so the supremum is never below -log_total
    return LegendreValue(max(t * a - _lse(lf + t * zf), -log_total) + 0.0, t)


def upper_tail_rate(z, logw, a):
    """sup_{t >= 0} (t a - log sum_i w_i e^{t z_i}): the rate of {mean of z > a}."""
    val, t = lower_tail_rate(-np.asarray(z, dtype=float), logw, -a)
    return LegendreValue(val, -t)


def rho_atoms(rho, sigma):
    """Per-letter log-likelihood ratio atoms under rho (z = +inf off supp sigma)."""
    on = rho.weights > 0
    lr = np.log(rho.weights[on])
    s = sigma.weights[on]
    z = np.full(lr.size, np.inf)
    z[s > 0] = lr[s > 0] - np.log(s[s > 0])
    return z, lr


def sigma_atoms(rho, sigma):
    """The same atoms weighted by sigma (z = -inf off supp rho)."""
    on = sigma.weights > 0
    ls = np.log(sigma.weights[on])
    r = rho.weights[on]
    z = np.full(ls.size, -np.inf)
    z[r > 0] = np.log(r[r > 0]) - ls[r > 0]
    return z, ls


def eta_legendre(rho, sigma, a):
    """eta(a) = sup_{theta <= 0} (theta a - psi(theta)), with theta = t."""
    return lower_tail_rate(*rho_atoms(rho, sigma), a)


def zeta_legendre(rho, sigma, a):
    """zeta(a) = sup_{theta >= -1} ((theta + 1) a - psi(theta)); theta = t - 1."""
    val, t = upper_tail_rate(*sigma_atoms(rho, sigma), a)
    return LegendreValue(val, t - 1.0)


def zeta_c_legendre(rho, sigma, a):
    """zeta^c(a) = sup_{theta <= -1} ((theta + 1) a - psi(theta)); theta = t - 1."""
    val, t = lower_tail_rate(*sigma_atoms(rho, sigma), a)
    return LegendreValue(val, t - 1.0)


def classical_eta_rate(rho, sigma, a):
    return eta_legendre(rho, sigma, a).value


def classical_zeta_rate(rho, sigma, a):
    return zeta_legendre(rho, sigma, a).value


def classical_zeta_c_rate(rho, sigma, a):
    return zeta_c_legendre(rho, sigma, a).value


def eta_domain(rho, sigma):
    """The interval [-D(sigma||rho), D(rho||sigma)] on which eta is a genuine tail rate."""
    return -kl_divergence(sigma, rho), kl_divergence(rho, sigma)


def cramer_rates(rho, sigma, grid):
    """Analytic (eta, zeta, zeta_c) of an i.i.d. classical pair on a grid."""
    grid = np.asarray(grid, dtype=float)
    za, la = rho_atoms(rho, sigma)
    zs, ls = sigma_atoms(rho, sigma)
    eta = [lower_tail_rate(za, la, a).value for a in grid]
    zeta = [upper_tail_rate(zs, ls, a).value for a in grid]
    zeta_c = [lower_tail_rate(zs, ls, a).value for a in grid]
    return (
        RateFunction(grid, eta, "eta_lower"),
        RateFunction(grid, zeta, "zeta_lower"),
        RateFunction(grid, zeta_c, "zeta_c_upper"),
    )


def is_classical_pair(pair):
    return isinstance(pair[0], FiniteMeasure) and isinstance(pair[1], FiniteMeasure)


class _QuantumEvaluator:
    """alpha, beta, beta_c of S_n(a) for an i.i.d. quantum pair at one n."""

    def __init__(self, rho, sigma, n, cap, **build_kw):
        rho, sigma = np.asarray(rho), np.asarray(sigma)
        if rho.shape == (2, 2):
            self._dec = build_decomposition(rho, sigma, n, **build_kw)
            self._oracle = None
        else:
            self._dec = None
            self._oracle = BruteForceOracle(rho, sigma, n, cap=cap)

    def __call__(self, a, mode):
        if self._dec is not None:
            return fast_iid_evaluation(self._dec, a, mode).evaluation
        return self._oracle.evaluate(a, (mode,))[mode].evaluation


def evaluator(pair, n, cap=DEFAULT_BRUTE_CAP, **kw):
    """A callable (a, mode) -> TestEvaluation of S_n(a) for a classical or quantum pair."""
    if is_classical_pair(pair):
        spec = iid_spectrum(pair[0], pair[1], n, **kw)
        return lambda a, mode: spectrum_alpha_beta(spec, a, mode)
    return _QuantumEvaluator(pair[0], pair[1], n, cap, **kw)


def finite_n_rate_samples(pair, n_list, a_grid, mode="strict", cap=DEFAULT_BRUTE_CAP):
    """{n: (eta_n, zeta_n, zeta_c_n)} as RateFunctions on ``a_grid``.

    Classical pairs use type-class spectra; qubit pairs use the Schur-Weyl
    blocks and other quantum pairs the brute-force oracle.
    """
    if mode not in MODES:
        raise InputError(f"unknown mode {mode!r}")
    grid = np.asarray(a_grid, dtype=float)
    out = {}
    for n in sorted(set(int(n) for n in n_list)):
        ev = evaluator(pair, n, cap)
        evs = [ev(a, mode) for a in grid]
        out[n] = (
            RateFunction(grid, [e.eta for e in evs], "eta_lower"),
            RateFunction(grid, [e.zeta for e in evs], "zeta_lower"),
            RateFunction(grid, [e.zeta_c for e in evs], "zeta_c_upper"),
        )
    return out


def spectrum_stein_thresholds(spec: LLRSpectrum, epsilon):
    """(sup{a : alpha_n(a) <= eps}, sup{a : alpha_n(a) < eps}) for the strict test.

    alpha_n(a) = rho{z <= a} is a right-continuous step function, so the
    first is the smallest atom whose cumulative mass exceeds eps and the
    second the smallest atom whose cumulative mass reaches it.
    """
    cdf = np.exp(np.logaddexp.accumulate(spec.log_rho))
    z = spec.z
    above = np.flatnonzero(cdf > epsilon)
    reach = np.flatnonzero(cdf >= epsilon)
    le = float(z[above[0]]) if above.size else math.inf
    lt = float(z[reach[0]]) if reach.size else math.inf
    return le, lt


def _bisect_threshold(alpha, lo, hi, epsilon, strict, tol=1e-10):
    """sup{a in [lo, hi] : alpha(a) <= eps} (or < eps) for nondecreasing alpha."""
    ok = (lambda x: alpha(x) < epsilon) if strict else (lambda x: alpha(x) <= epsilon)
    if not ok(lo):
        return lo
    if ok(hi):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class SteinRow:
    n: int
    threshold: float
    threshold_strict: float


@dataclass(frozen=True)
class SteinReport:
    epsilon: float
    D_lower_estimate: float
    D_upper_estimate: float
    per_n_thresholds: List[SteinRow]
    strong_converse_gap: float
    resolution: float
    target: Optional[float] = None
    degenerate: bool = False
    flags: Tuple[str, ...] = field(default=())

    def errors_to_target(self):
        if self.target is None:
            return []
        return [abs(row.threshold - self.target) for row in self.per_n_thresholds]


def stein_report(pair, epsilon, n_list, a_grid=None, cap=DEFAULT_BRUTE_CAP):
    """Finite-n proxies of the spectral divergence rates at level ``epsilon``.

    For every n the threshold sup{a : alpha_n(a) <= eps} estimates the
    lower rate and sup{a : alpha_n(a) < eps} the upper one. The estimates
    reported are those at the largest n. Classical pairs are resolved
    exactly on their spectra; quantum pairs by bisection between the ends
    of ``a_grid`` (default [-1, 2]), to 1e-10.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise InputError("epsilon must lie in [0, 1]")
    classical = is_classical_pair(pair)
    rows = []
    resolution = 0.0
    flags = []
    for n in sorted(set(int(n) for n in n_list)):
        if classical:
            spec = iid_spectrum(pair[0], pair[1], n)
            le, lt = spectrum_stein_thresholds(spec, epsilon)
            fin = spec.z[np.isfinite(spec.z)]
            gaps = np.diff(fin)
            resolution = float(np.max(gaps)) if gaps.size else 0.0
        else:
            lo, hi = (-1.0, 2.0) if a_grid is None else (float(np.min(a_grid)), float(np.max(a_grid)))
            ev = evaluator(pair, n, cap)
            alpha = lambda x, ev=ev: ev(x, "strict").alpha  # noqa: E731
            le = _bisect_threshold(alpha, lo, hi, epsilon, strict=False)
            lt = _bisect_threshold(alpha, lo, hi, epsilon, strict=True)
            if le in (lo, hi):
                flags.append(f"threshold at bracket end for n={n}")
            resolution = 1e-10
        rows.append(SteinRow(n, le, lt))
    last = rows[-1]
    if classical:
        target = kl_divergence(pair[0], pair[1])
    else:
        target = quantum_relative_entropy(np.asarray(pair[0]), np.asarray(pair[1]))
    degenerate = target == 0.0 or (math.isfinite(target) and abs(target) < 1e-12)
    if degenerate:
        flags.append("degenerate: zero divergence")
    return SteinReport(
        epsilon,
        last.threshold,
        last.threshold_strict,
        rows,
        last.threshold_strict - last.threshold,
        resolution + GRID_ATOL,
        target,
        degenerate,
        tuple(flags),
    )


def rate_table(rates: Dict[int, Tuple[RateFunction, ...]]):
    """Flatten finite-n samples into rows (n, a, eta, zeta, zeta_c)."""
    rows = []
    for n in sorted(rates):
        eta, zeta, zeta_c = rates[n]
        for a, e, z, zc in zip(eta.grid, eta.values, zeta.values, zeta_c.values):
            rows.append((n, float(a), float(e), float(z), float(zc)))
    return rows
