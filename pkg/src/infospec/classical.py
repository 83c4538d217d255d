"""
Finite classical measures, likelihood tests and exact i.i.d. spectra.

Probabilities of rare events at large n underflow double precision, so
spectra carry log-masses and test evaluations carry both the linear and
the log value of every error probability.
"""
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import InputError, SizeError

NORMALIZED_ATOL = 1e-12
Z_MERGE_TOL = 1e-12
TIE_RTOL = 1e-12
DEFAULT_TYPE_CAP = 2_000_000


def _log(x):
    with np.errstate(divide="ignore"):
        return np.log(x)


@dataclass(frozen=True)
class FiniteMeasure:
    """Nonnegative weights on the alphabet {0, ..., m-1}."""

    weights: np.ndarray
    normalized: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if w.size == 0:
            raise InputError("measure needs at least one letter")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("measure weights must be finite and nonnegative")
        if self.normalized and abs(math.fsum(w) - 1.0) > NORMALIZED_ATOL:
            raise InputError(f"normalized measure sums to {math.fsum(w)!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def counting(cls, m):
        return cls(np.ones(m), normalized=False)

    @property
    def size(self):
        return self.weights.size

    @property
    def total(self):
        return math.fsum(self.weights)

    @property
    def log_weights(self):
        return _log(self.weights)

    def iid_power(self, n):
        """Product measure on m**n sequences, first symbol most significant."""
        w = self.weights
        out = w
        for _ in range(n - 1):
            out = np.multiply.outer(out, w).reshape(-1)
        return FiniteMeasure(out, normalized=False)


def _check_pair(rho, sigma):
    if rho.size != sigma.size:
        raise InputError(f"alphabet mismatch: {rho.size} vs {sigma.size}")


@dataclass(frozen=True)
class ClassicalTest:
    accept: np.ndarray

    def __post_init__(self):
        t = np.array(self.accept, dtype=float, copy=True).reshape(-1)
        if np.any(t < 0) or np.any(t > 1) or not np.all(np.isfinite(t)):
            raise InputError("test values must lie in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "accept", t)

    @property
    def deterministic(self):
        return bool(np.all((self.accept == 0) | (self.accept == 1)))

    @property
    def region(self):
        return np.flatnonzero(self.accept == 1)


def _exponent(logp, n):
    return math.inf if logp == -math.inf else -logp / n


@dataclass(frozen=True)
class TestEvaluation:
    """Error probabilities of one test and their per-symbol exponents."""

    __test__ = False

    n: int
    alpha: float
    beta: float
    beta_c: float
    log_alpha: float = field(repr=False)
    log_beta: float = field(repr=False)
    log_beta_c: float = field(repr=False)

    @classmethod
    def from_values(cls, n, alpha, beta, beta_c, atol=1e-9):
        vals = []
        for name, v in (("alpha", alpha), ("beta", beta), ("beta_c", beta_c)):
            v = float(v)
            if v < -atol:
                raise InputError(f"{name} = {v!r} is negative")
            vals.append(max(v, 0.0))
        logs = [math.log(v) if v > 0 else -math.inf for v in vals]
        return cls(n, *vals, *logs)

    @classmethod
    def from_logs(cls, n, log_alpha, log_beta, log_beta_c):
        logs = [float(x) for x in (log_alpha, log_beta, log_beta_c)]
        # counting measures can exceed the float range; the log value stays exact
        return cls(n, *(math.exp(x) if x < 709.0 else math.inf for x in logs), *logs)

    @property
    def eta(self):
        return _exponent(self.log_alpha, self.n)

    @property
    def zeta(self):
        return _exponent(self.log_beta, self.n)

    @property
    def zeta_c(self):
        return _exponent(self.log_beta_c, self.n)


def classical_np_test(rho, sigma, a, n=1, tie="strict", p=None):
    """The likelihood test accepting where rho(x) > e^{na} sigma(x).

    ``tie`` decides letters with rho(x) = e^{na} sigma(x): ``"strict"``
    rejects them, ``"nonstrict"`` accepts them, ``"randomized"`` accepts
    them with probability ``p``.
    """
    _check_pair(rho, sigma)
    e = math.exp(n * a) if n * a < 700 else math.inf
    r = rho.weights
    with np.errstate(invalid="ignore", over="ignore"):
        s = np.where(sigma.weights > 0, e * sigma.weights, 0.0)
    d = r - s
    scale = np.maximum(r, np.where(np.isfinite(s), s, 0.0))
    tol = TIE_RTOL * scale
    gt = (d > tol) | ((r > 0) & (sigma.weights == 0))
    lt = (d < -tol) | np.isinf(s)
    tie_val = {"strict": 0.0, "nonstrict": 1.0}.get(tie)
    if tie == "randomized":
        if p is None or not 0.0 <= p <= 1.0:
            raise InputError("randomized tie policy needs p in [0, 1]")
        tie_val = float(p)
    elif tie_val is None:
        raise InputError(f"unknown tie policy {tie!r}")
    accept = np.where(gt, 1.0, np.where(lt, 0.0, tie_val))
    return ClassicalTest(accept)


def evaluate_test(rho, sigma, test, n=1):
    _check_pair(rho, sigma)
    t = test.accept
    alpha = math.fsum(rho.weights * (1.0 - t))
    beta = math.fsum(sigma.weights * t)
    beta_c = math.fsum(sigma.weights * (1.0 - t))
    return TestEvaluation.from_values(n, alpha, beta, beta_c)


@dataclass(frozen=True)
class LLRSpectrum:
    """Joint law of the per-symbol log-likelihood ratio under rho and sigma.

    ``z`` is strictly increasing and may hold +inf (rho-mass off the
    support of sigma) or -inf (sigma-mass off the support of rho).
    """

    n: int
    z: np.ndarray
    log_rho: np.ndarray
    log_sigma: np.ndarray

    @property
    def rho_mass(self):
        return np.exp(self.log_rho)

    @property
    def sigma_mass(self):
        return np.exp(self.log_sigma)

    @property
    def log_sigma_total(self):
        return float(logsumexp(self.log_sigma)) if self.z.size else -math.inf

    def __len__(self):
        return self.z.size


def _merge_points(z, log_rho, log_sigma, tol=Z_MERGE_TOL):
    """Sort by z and merge neighbours closer than ``tol`` (equal infinities merge)."""
    order = np.argsort(z, kind="stable")
    z, log_rho, log_sigma = z[order], log_rho[order], log_sigma[order]
    if z.size == 0:
        return z, log_rho, log_sigma
    with np.errstate(invalid="ignore"):
        same = (np.diff(z) <= tol) | (z[1:] == z[:-1])
    starts = np.flatnonzero(np.concatenate([[True], ~same]))
    return (
        z[starts],
        np.logaddexp.reduceat(log_rho, starts),
        np.logaddexp.reduceat(log_sigma, starts),
    )


def compositions(n, m):
    """All (n_1, ..., n_m) with nonnegative entries summing to n, lexicographic."""
    if m == 1:
        return np.array([[n]], dtype=np.int64)
    parts = []
    for first in range(n, -1, -1):
        rest = compositions(n - first, m - 1)
        parts.append(np.column_stack([np.full(rest.shape[0], first, dtype=np.int64), rest]))
    return np.vstack(parts)


def type_count(n, m):
    return math.comb(n + m - 1, m - 1)


def _log_multinomial(counts):
    n = counts.sum(axis=1)
    return gammaln(n + 1.0) - gammaln(counts + 1.0).sum(axis=1)


def _log_type_mass(counts, logw, log_coef):
    # 0 * log 0 = 0: letters with zero weight only matter when used
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * logw, 0.0)
    return log_coef + terms.sum(axis=1)


def _renormalize(logm, log_total):
    lse = _lse(logm[logm > -np.inf])
    return logm + (log_total - lse) if math.isfinite(lse) else logm


def iid_spectrum(rho, sigma, n, cap=DEFAULT_TYPE_CAP):
    """Exact spectrum of (1/n) log(rho^n / sigma^n) by type-class enumeration."""
    _check_pair(rho, sigma)
    if n < 1:
        raise InputError("block length must be positive")
    m = rho.size
    count = type_count(n, m)
    if count > cap:
        raise SizeError(f"{count} type classes exceed cap {cap}", size=count)
    counts = compositions(n, m)
    lr_w, ls_w = rho.log_weights, sigma.log_weights
    coef = _log_multinomial(counts)
    log_rho = _log_type_mass(counts, lr_w, coef)
    log_sigma = _log_type_mass(counts, ls_w, coef)
    live = (log_rho > -np.inf) | (log_sigma > -np.inf)
    counts, log_rho, log_sigma = counts[live], log_rho[live], log_sigma[live]
    # gammaln rounding is common to all classes; pin each total to n log(sum w)
    log_rho = _renormalize(log_rho, n * math.log(rho.total))
    log_sigma = _renormalize(log_sigma, n * math.log(sigma.total))
    both = (rho.weights > 0) & (sigma.weights > 0)
    llr = np.where(both, lr_w - np.where(both, ls_w, 0.0), 0.0)
    z = (counts * llr).sum(axis=1) / n
    z = np.where(log_sigma == -np.inf, np.inf, z)
    z = np.where(log_rho == -np.inf, -np.inf, z)
    return LLRSpectrum(n, *_merge_points(z, log_rho, log_sigma))


def spectrum_from_measures(rho, sigma, n=1):
    """Spectrum of an arbitrary pair of measures on one alphabet (no i.i.d. structure)."""
    _check_pair(rho, sigma)
    lr, ls = rho.log_weights, sigma.log_weights
    live = (lr > -np.inf) | (ls > -np.inf)
    lr, ls = lr[live], ls[live]
    with np.errstate(invalid="ignore"):
        z = (lr - ls) / n
    z = np.where(ls == -np.inf, np.inf, z)
    z = np.where(lr == -np.inf, -np.inf, z)
    return LLRSpectrum(n, *_merge_points(z, lr, ls))


def _lse(x):
    """log sum exp for 1-D arrays; plain numpy is far cheaper than scipy on short inputs."""
    if x.size == 0:
        return -math.inf
    m = float(np.max(x))
    if not math.isfinite(m):
        return m
    return m + math.log(float(np.sum(np.exp(x - m))))


def spectrum_alpha_beta(spec, a, tie="strict"):
    """Evaluate the likelihood test S_n(a) on an exact spectrum.

    strict: alpha = rho{z <= a}, beta = sigma{z > a};
    nonstrict: alpha = rho{z < a}, beta = sigma{z >= a}.
    """
    z = spec.z
    tol = Z_MERGE_TOL * max(1.0, abs(a)) if math.isfinite(a) else 0.0
    if tie == "strict":
        acc = z > a + tol
    elif tie == "nonstrict":
        acc = z >= a - tol
    else:
        raise InputError(f"unknown tie policy {tie!r}")
    return TestEvaluation.from_logs(
        spec.n, _lse(spec.log_rho[~acc]), _lse(spec.log_sigma[acc]), _lse(spec.log_sigma[~acc])
    )


def spectrum_alpha_beta_grid(spec, a_grid, tie="strict"):
    return [spectrum_alpha_beta(spec, float(a), tie) for a in np.asarray(a_grid, dtype=float)]


def kl_divergence(rho, sigma):
    _check_pair(rho, sigma)
    r, s = rho.weights, sigma.weights
    on = r > 0
    if np.any(s[on] == 0):
        return math.inf
    return math.fsum(r[on] * (np.log(r[on]) - np.log(s[on])))


def llr_points(rho, sigma):
    """(z, log rho) over the support of rho; z = +inf where sigma vanishes."""
    _check_pair(rho, sigma)
    on = rho.weights > 0
    lr = np.log(rho.weights[on])
    s = sigma.weights[on]
    z = np.full(lr.size, np.inf)
    pos = s > 0
    z[pos] = lr[pos] - np.log(s[pos])
    return z, lr


def cgf(z, logw, t):
    """log sum_i w_i e^{t z_i} with the conventions for z = +inf."""
    t = float(t)
    if t == 0.0:
        return _lse(np.asarray(logw))
    inf = np.isinf(z)
    if t > 0 and np.any(inf & (z > 0)):
        return math.inf
    if t < 0 and np.any(inf & (z < 0)):
        return math.inf
    fin = ~inf
    return _lse(logw[fin] + t * z[fin])


def classical_psi(rho, sigma, theta):
    """psi(theta) = log sum_x rho(x)^{1+theta} sigma(x)^{-theta} over supp(rho)."""
    z, lr = llr_points(rho, sigma)
    return cgf(z, lr, theta)


def tilted_measure(rho, sigma, theta):
    """tau proportional to rho^{1+theta} sigma^{-theta} (theta <= 0 keeps it well defined)."""
    z, lr = llr_points(rho, sigma)
    on = np.flatnonzero(rho.weights > 0)
    with np.errstate(invalid="ignore"):
        logt = np.where(np.isinf(z), np.where(theta == 0, lr, -np.inf), lr + theta * z)
    if theta > 0 and np.any(np.isinf(z)):
        raise InputError("tilt with theta > 0 is undefined off the support of sigma")
    logt = logt - _lse(logt)
    w = np.zeros(rho.size)
    w[on] = np.exp(logt)
    return FiniteMeasure(w / math.fsum(w))


def binary_divergence(p, q):
    """KL divergence between the laws (p, 1-p) and (q, 1-q)."""
    def term(x, y):
        if x == 0:
            return 0.0
        if y == 0:
            return math.inf
        return x * math.log(x / y)

    return term(p, q) + term(1.0 - p, 1.0 - q)


def truncate_acceptance_region(test, rho, target_size):
    """Keep the ``target_size`` accepted letters of largest rho-mass.

    Ties in mass go to the smaller alphabet index, so the result is
    deterministic.
    """
    if not test.deterministic:
        raise InputError("truncation needs a deterministic test")
    region = test.region
    if not 0 <= target_size <= region.size:
        raise InputError(f"target size {target_size} outside [0, {region.size}]")
    order = np.lexsort((region, -rho.weights[region]))
    keep = region[order[:target_size]]
    out = np.zeros(test.accept.size)
    out[keep] = 1.0
    return ClassicalTest(out)


def deterministic_tests(size):
    """Every {0,1}-valued test on an alphabet of the given size."""
    for bits in range(2**size):
        yield ClassicalTest([(bits >> (size - 1 - i)) & 1 for i in range(size)])


def as_measure(x, normalized: Optional[bool] = None):
    if isinstance(x, FiniteMeasure):
        return x
    w = np.asarray(x, dtype=float)
    if normalized is None:
        normalized = abs(math.fsum(w) - 1.0) <= NORMALIZED_ATOL
    return FiniteMeasure(w, normalized=normalized)
