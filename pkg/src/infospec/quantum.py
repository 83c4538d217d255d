"""
Quantum likelihood tests, relative entropy, psi and brute-force i.i.d. oracles.
"""
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import logsumexp

from .classical import TestEvaluation, binary_divergence
from .errors import InputError, SizeError
from .operators import (
    ZERO_RTOL,
    DEFAULT_BRUTE_CAP,
    as_hermitian,
    spectral_decompose,
    tensor_power,
    trace_pair,
    diagonal_in_basis,
    eig_tolerance,
)

SUPPORT_TOL = 1e-10
QTEST_ATOL = 1e-10
MODES = ("strict", "nonstrict")


def _check_dims(*ops):
    dims = {np.shape(o) for o in ops}
    if len(dims) != 1:
        raise InputError(f"dimension mismatch: {sorted(dims)}")


def as_quantum_test(t):
    t = as_hermitian(t)
    w = np.linalg.eigvalsh(t)
    if w[0] < -QTEST_ATOL or w[-1] > 1 + QTEST_ATOL:
        raise InputError(f"test eigenvalues {w[0]:.3e}..{w[-1]:.3e} leave [0, 1]")
    return t


def np_projections(rho, sigma, a, n=1, modes=MODES):
    """Likelihood projections for several modes from one eigendecomposition.

    An eigenpair (lambda, v) of c rho - c' sigma counts as a tie when
    |lambda| <= 1e-11 (<v|c rho|v> + <v|c' sigma|v>); the rule depends only
    on the eigenvector, so it survives changes of basis, block splitting
    and positive rescaling.
    """
    _check_dims(rho, sigma)
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    cr, cs = threshold_coefficients(n * a)
    w, v = spectral_decompose(cr * rho - cs * sigma)
    sec = SectorSpectrum(w, diagonal_in_basis(rho, v), diagonal_in_basis(sigma, v), cr, cs)
    band = sec.tie_band()
    out = {}
    for m in modes:
        vk = v[:, select_eigenvectors(w, band, m)]
        out[m] = vk @ vk.conj().T
    return out


def quantum_np_projection(rho, sigma, a, n=1, mode="strict"):
    """{rho - e^{na} sigma > 0} (strict) or {... >= 0} (nonstrict).

    ``rho`` and ``sigma`` are the block-n operators themselves; ``n`` only
    scales the threshold.
    """
    return np_projections(rho, sigma, a, n, modes=(mode,))[mode]


def evaluate_quantum_test(rho, sigma, test, n=1):
    _check_dims(rho, sigma, test)
    comp = np.eye(test.shape[0]) - test
    return TestEvaluation.from_values(
        n, trace_pair(rho, comp), trace_pair(sigma, test), trace_pair(sigma, comp)
    )


def _eig_support(a):
    w, v = spectral_decompose(a)
    return w, v, w > eig_tolerance(w)


def _overlaps(vr, vs):
    return np.abs(vr.conj().T @ vs) ** 2


def support_violation(rho, sigma):
    """Tr(rho P_null(sigma)): the rho-weight outside the support of sigma."""
    _, vs, on = _eig_support(sigma)
    null = vs[:, ~on]
    if null.shape[1] == 0:
        return 0.0
    return max(trace_pair(np.asarray(rho), null @ null.conj().T), 0.0)


def quantum_relative_entropy(rho, sigma):
    """D(rho || sigma) = Tr rho (log rho - log sigma); +inf off support."""
    _check_dims(rho, sigma)
    if support_violation(rho, sigma) > SUPPORT_TOL:
        return math.inf
    wr, vr, onr = _eig_support(rho)
    ws, vs, ons = _eig_support(sigma)
    lam = wr[onr]
    ov = _overlaps(vr[:, onr], vs[:, ons])
    first = math.fsum(lam * np.log(lam))
    second = math.fsum((lam[:, None] * ov * np.log(ws[ons])[None, :]).ravel())
    return first - second


def _psi_terms(rho, sigma):
    """(log lambda_i, log mu_j, overlaps) over supp(rho) x all of sigma's spectrum."""
    wr, vr, onr = _eig_support(rho)
    ws, vs, ons = _eig_support(sigma)
    ov = _overlaps(vr[:, onr], vs)
    with np.errstate(divide="ignore"):
        lmu = np.where(ons, np.log(np.where(ons, ws, 1.0)), -np.inf)
    return np.log(wr[onr]), lmu, ov, wr[onr]


def quantum_psi(rho, sigma, theta):
    """psi(theta) = log Tr rho^{1+theta} sigma^{-theta}.

    Evaluated through the two eigenbases: sum_ij lambda_i^{1+theta}
    mu_j^{-theta} |<u_i|v_j>|^2 over the supports.
    """
    _check_dims(rho, sigma)
    theta = float(theta)
    if theta == 0.0:
        return math.log(float(np.trace(rho).real))
    if theta > 0 and support_violation(rho, sigma) > SUPPORT_TOL:
        return math.inf
    llam, lmu, ov, _ = _psi_terms(rho, sigma)
    live = np.isfinite(lmu)[None, :] & (ov > 0)
    with np.errstate(divide="ignore"):
        logs = (1 + theta) * llam[:, None] - theta * np.where(np.isfinite(lmu), lmu, 0.0)[None, :] + np.log(
            np.where(live, ov, 1.0)
        )
    vals = logs[live]
    return float(logsumexp(vals)) if vals.size else -math.inf


class QuantumPsi:
    """psi for a fixed pair, with the eigendecompositions computed once."""

    def __init__(self, rho, sigma):
        _check_dims(rho, sigma)
        self.infinite_above_zero = support_violation(rho, sigma) > SUPPORT_TOL
        self.log_trace = math.log(float(np.trace(rho).real))
        llam, lmu, ov, _ = _psi_terms(rho, sigma)
        live = np.isfinite(lmu)[None, :] & (ov > 0)
        self._llam = np.broadcast_to(llam[:, None], live.shape)[live]
        self._lmu = np.broadcast_to(lmu[None, :], live.shape)[live]
        self._lov = np.log(ov[live])

    def __call__(self, theta):
        theta = float(theta)
        if theta == 0.0:
            return self.log_trace
        if theta > 0 and self.infinite_above_zero:
            return math.inf
        if self._lov.size == 0:
            return -math.inf
        return float(logsumexp((1 + theta) * self._llam - theta * self._lmu + self._lov))


def renyi_tail_bound(rho, sigma, n, a, theta):
    """exp(-n (a theta - psi(theta))) for 0 <= theta <= 1."""
    if not 0.0 <= theta <= 1.0:
        raise InputError("theta must lie in [0, 1]")
    psi = quantum_psi(rho, sigma, theta)
    return math.exp(-n * (a * theta - psi))


def measured_binary_divergence(rho, sigma, test):
    """KL divergence of the two-outcome distributions induced by ``test``."""
    p = min(max(trace_pair(rho, test), 0.0), 1.0)
    q = min(max(trace_pair(sigma, test), 0.0), 1.0)
    return binary_divergence(p, q)


# ---------------------------------------------------------------- pure states


@dataclass(frozen=True)
class PureStatePair:
    """rho = |psi><psi|, sigma = |phi><phi| with |<psi|phi>|^2 = delta."""

    delta: float
    n: int = 1

    def __post_init__(self):
        if not 0.0 <= self.delta <= 1.0:
            raise InputError(f"overlap {self.delta!r} outside [0, 1]")
        if self.n < 1:
            raise InputError("block length must be positive")


def pure_state_operators(delta):
    psi = np.array([1.0, 0.0])
    phi = np.array([math.sqrt(delta), math.sqrt(1.0 - delta)])
    return np.outer(psi, psi), np.outer(phi, phi)


def _pure_g_alpha(delta, x):
    """(g, alpha) = (Tr rho S, Tr rho S^c) for threshold e^x, cancellation free.

    With E = e^x, Q = sqrt((1+E)^2 - 4 E delta) and N = 1 + E - 2 E delta
    we have g = (Q + N) / 2Q, alpha = (Q - N) / 2Q and
    Q^2 - N^2 = 4 E^2 delta (1 - delta); whichever of Q +- N is small is
    recovered from that product. For x > 0 everything is divided by E.
    """
    if x <= 0:
        e = math.exp(x)
        q = math.sqrt((1.0 - e) ** 2 + 4.0 * e * (1.0 - delta))
        nn = 1.0 + e - 2.0 * e * delta
        prod = 4.0 * e * e * delta * (1.0 - delta)
    else:
        t = math.exp(-x)
        q = math.sqrt((1.0 - t) ** 2 + 4.0 * t * (1.0 - delta))
        nn = 1.0 + t - 2.0 * delta
        prod = 4.0 * delta * (1.0 - delta)
    if q == 0.0:
        raise InputError("closed form is degenerate at delta = 1, a = 0")
    if nn >= 0:
        plus, minus = q + nn, prod / (q + nn)
    else:
        minus = q - nn
        plus = prod / minus
    return plus / (2 * q), minus / (2 * q)


def pure_state_g(pair, a):
    """Tr(rho_n {rho_n - e^{na} sigma_n > 0}) for the pure pair."""
    return _pure_g_alpha(pair.delta, pair.n * a)[0]


def pure_state_panel(pair, a):
    """alpha, beta and beta_c of the strict likelihood projection, in closed form.

    beta is obtained from the alpha formula with the roles of the states
    exchanged and the threshold inverted.
    """
    x = pair.n * a
    _, alpha = _pure_g_alpha(pair.delta, x)
    g_swap, alpha_swap = _pure_g_alpha(pair.delta, -x)
    return TestEvaluation.from_values(pair.n, alpha, alpha_swap, g_swap)


def pure_state_numeric_panel(pair, a, mode="strict"):
    """The same panel from the 2x2 matrices and an eigensolver."""
    rho, sigma = pure_state_operators(pair.delta)
    p = quantum_np_projection(rho, sigma, a, pair.n, mode)
    return evaluate_quantum_test(rho, sigma, p, pair.n)


# --------------------------------------------------------------- brute force


@dataclass(frozen=True)
class IIDEvaluation:
    n: int
    a: float
    mode: str
    g: float
    evaluation: TestEvaluation


def _pair_basis(d):
    """Orthogonal W on C^d (x) C^d: symmetric vectors first, then antisymmetric."""
    sym, anti = [], []
    for i in range(d):
        v = np.zeros(d * d)
        v[i * d + i] = 1.0
        sym.append(v)
    for i in range(d):
        for j in range(i + 1, d):
            v = np.zeros(d * d)
            v[i * d + j] = v[j * d + i] = 1 / math.sqrt(2)
            sym.append(v)
            u = np.zeros(d * d)
            u[i * d + j], u[j * d + i] = 1 / math.sqrt(2), -1 / math.sqrt(2)
            anti.append(u)
    return np.array(sym).T, np.array(anti).T


def _pair_blocks(x, ws, wa):
    xx = np.kron(x, x)
    return ws.T @ xx @ ws, wa.T @ xx @ wa


def _paired_sectors(rho, sigma, n):
    """Blocks of rho^n and sigma^n after pairing slots (1,2), (3,4), ...

    X (x) X commutes with the swap of its two factors, so in the basis
    splitting each pair into symmetric and antisymmetric parts, X^{(x) n}
    is block diagonal with one block per choice of part for every pair.
    Blocks with the same number j of antisymmetric pairs differ only by a
    permutation of the pairs, so one representative is kept with weight
    C(pairs, j). A leftover odd slot contributes a plain factor X.
    Yields (block of rho^n, block of sigma^n, weight).
    """
    d = rho.shape[0]
    ws, wa = _pair_basis(d)
    (rs, ra), (ss, sa) = _pair_blocks(rho, ws, wa), _pair_blocks(sigma, ws, wa)
    npairs, odd = divmod(n, 2)
    for j in range(npairs + 1 if wa.shape[1] else 1):
        xr = np.ones((1, 1))
        xs = np.ones((1, 1))
        for i in range(npairs):
            anti = i < j
            xr = np.kron(xr, ra if anti else rs)
            xs = np.kron(xs, sa if anti else ss)
        if odd:
            xr = np.kron(xr, rho)
            xs = np.kron(xs, sigma)
        yield xr, xs, math.comb(npairs, j)


@dataclass(frozen=True)
class SectorSpectrum:
    """One diagonal block of a likelihood-test computation.

    In its eigenbasis the block of the (positively rescaled) difference
    operator is diag(w) = coef_rho diag_rho - coef_sigma diag_sigma on the
    diagonal. The actual masses are e^{log_r} diag_rho and
    e^{log_s} diag_sigma, where the log scales may include multiplicities.
    """

    w: np.ndarray
    diag_rho: np.ndarray
    diag_sigma: np.ndarray
    coef_rho: float
    coef_sigma: float
    log_r: float = 0.0
    log_s: float = 0.0

    def tie_band(self):
        """Per-eigenvector zero band: 1e-11 (<v|c rho|v> + <v|c' sigma|v>)."""
        return ZERO_RTOL * (self.coef_rho * np.abs(self.diag_rho) + self.coef_sigma * np.abs(self.diag_sigma))


def threshold_coefficients(x):
    """(c, c') with c rho - c' sigma a positive multiple of rho - e^x sigma, max(c, c') = 1."""
    return (1.0, math.exp(x)) if x <= 0 else (math.exp(-x), 1.0)


def _sector_spectrum(xr, xs, x):
    cr, cs = threshold_coefficients(x)
    w, v = spectral_decompose(cr * xr - cs * xs)
    return SectorSpectrum(w, diagonal_in_basis(xr, v), diagonal_in_basis(xs, v), cr, cs)


def select_eigenvectors(w, band, mode):
    if mode == "strict":
        return w > band
    if mode == "nonstrict":
        return w >= -band
    raise InputError(f"unknown mode {mode!r}")


def _log_terms(vals, scale):
    vals = vals[vals > 0]
    if scale == -math.inf or vals.size == 0:
        return np.empty(0)
    return np.log(vals) + scale


def _total(chunks):
    logs = np.concatenate(chunks) if chunks else np.empty(0)
    if logs.size == 0:
        return 0.0, -math.inf
    return math.fsum(np.exp(logs).tolist()), float(logsumexp(logs))


def sum_sectors(sectors, modes, n, a):
    """Combine sector spectra into g, alpha, beta and beta_c for each mode."""
    out = {}
    for m in modes:
        acc = ([], [], [], [])
        for s in sectors:
            keep = select_eigenvectors(s.w, s.tie_band(), m)
            parts = (
                (s.diag_rho[keep], s.log_r),
                (s.diag_rho[~keep], s.log_r),
                (s.diag_sigma[keep], s.log_s),
                (s.diag_sigma[~keep], s.log_s),
            )
            for lst, (vals, scale) in zip(acc, parts):
                lst.append(_log_terms(vals, scale))
        (g, _), (al, lal), (be, lbe), (bc, lbc) = (_total(c) for c in acc)
        out[m] = IIDEvaluation(n, a, m, g, TestEvaluation(n, al, be, bc, lal, lbe, lbc))
    return out


class BruteForceOracle:
    """Exact g_n(a), alpha, beta, beta_c from the full tensor power.

    ``method="dense"`` diagonalizes rho^n - e^{na} sigma^n directly.
    ``method="paired"`` first applies the exact orthogonal change of basis
    of `_paired_sectors`, which splits the same operator into independent
    weighted blocks (for qubits the largest has 3^{n/2} rows). "auto" picks
    dense up to dimension 32. The blocks are built once and reused for
    every threshold.
    """

    def __init__(self, rho, sigma, n, method="auto", cap=DEFAULT_BRUTE_CAP):
        rho = np.asarray(rho)
        sigma = np.asarray(sigma)
        _check_dims(rho, sigma)
        if n < 1:
            raise InputError("block length must be positive")
        size = rho.shape[0] ** n
        if size > cap:
            raise SizeError(f"tensor power of dimension {size} exceeds cap {cap}", size=size)
        if method == "auto":
            method = "dense" if size <= 32 else "paired"
        if method == "dense":
            self.pieces = [(tensor_power(rho, n, cap), tensor_power(sigma, n, cap), 1)]
        elif method == "paired":
            self.pieces = list(_paired_sectors(rho, sigma, n))
        else:
            raise InputError(f"unknown brute-force method {method!r}")
        self.n = n
        self.method = method

    def evaluate(self, a, modes=MODES):
        sectors = []
        for xr, xs, weight in self.pieces:
            sec = _sector_spectrum(xr, xs, self.n * a)
            lw = math.log(weight)
            sectors.append(replace(sec, log_r=lw, log_s=lw))
        return sum_sectors(sectors, modes, self.n, a)


def brute_force_iid_evaluations(rho, sigma, n, a, modes=MODES, method="auto", cap=DEFAULT_BRUTE_CAP):
    """One-shot `BruteForceOracle` evaluation."""
    return BruteForceOracle(rho, sigma, n, method, cap).evaluate(a, modes)


def brute_force_iid_g(rho, sigma, n, a, mode="strict", method="auto", cap=DEFAULT_BRUTE_CAP):
    """g_n(a) = Tr(rho^n {rho^n - e^{na} sigma^n > 0}) (or >= 0)."""
    return brute_force_iid_evaluations(rho, sigma, n, a, (mode,), method, cap)[mode].g


def np_fuzz_residuals(ev_s, ev_t, e):
    """Slack in the four likelihood-test inequalities for one comparison test.

    Returns (rhs - lhs) for: alpha + E beta <= 1, optimality against T,
    alpha - E beta_c <= 0, and the complementary optimality against T.
    The first needs rho to have unit trace.
    """
    return (
        1.0 - (ev_s.alpha + e * ev_s.beta),
        (ev_t.alpha + e * ev_t.beta) - (ev_s.alpha + e * ev_s.beta),
        -(ev_s.alpha - e * ev_s.beta_c),
        (ev_t.alpha - e * ev_t.beta_c) - (ev_s.alpha - e * ev_s.beta_c),
    )
