"""
Error exponents from rate functions, and single-letter i.i.d. formulas.

Grid evaluations use extended reals: an empty sup is -inf and an empty
inf is +inf. Every dual-form check allows one grid step plus 1e-9.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .classical import (
    ClassicalTest,
    cgf,
    classical_np_test,
    classical_psi,
    evaluate_test,
    kl_divergence,
    llr_points,
    tilted_measure,
)
from .errors import InputError, PropertyFailure, SizeError
from .operators import DEFAULT_BRUTE_CAP, tensor_power
from .quantum import QuantumPsi, evaluate_quantum_test, np_projections, quantum_relative_entropy
from .rates import RateFunction, grid_tolerance, is_classical_pair

THETA_INSET = 1e-6
THETA_FLOOR = -40.0
THETA_LIMIT = -1e6
THETA_XTOL = 1e-10


@dataclass(frozen=True)
class ExponentQuery:
    r: float = 0.0
    epsilon: float = 0.5
    theta_points: int = 64

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise InputError("epsilon must lie in [0, 1]")
        if self.theta_points < 64:
            raise InputError("theta grid needs at least 64 points")


@dataclass(frozen=True)
class ExponentResult:
    value: float
    optimizer: float
    method: str
    flags: Tuple[str, ...] = ()
    forms: dict = field(default_factory=dict, compare=False)


def _shared_grid(*rates):
    g = rates[0].grid
    for rf in rates[1:]:
        if rf.grid.shape != g.shape or not np.array_equal(rf.grid, g):
            raise InputError("rate functions must share one grid")
    return g


def _close(x, y, tol):
    if math.isinf(x) or math.isinf(y):
        return x == y
    return abs(x - y) <= tol


def B_e_from_rates(eta: RateFunction, zeta: RateFunction, r):
    """Hoeffding-type exponent from (eta, zeta) tables.

    sup{zeta(a) : eta(a) >= r} and inf{a + eta(a) : eta(a) < r} are both
    evaluated. When the feasible set of the sup reaches the right end of
    the grid the sup is truncated by the grid, and the inf-form is
    returned instead.
    """
    a = _shared_grid(eta, zeta)
    e, z = eta.values, zeta.values
    tol = grid_tolerance(a)
    feas = e >= r
    sup_form = float(np.max(z[feas])) if feas.any() else -math.inf
    inf_form = float(np.min(a[~feas] + e[~feas])) if (~feas).any() else math.inf
    flags = ["a0 grid-resolved"]
    if not feas.any():
        flags.append("empty constraint set")
        return ExponentResult(-math.inf, -math.inf, "b-e-rates", tuple(flags), {"sup": sup_form, "inf": inf_form})
    # a0: the largest grid point sharing a zeta value attained on the feasible set
    levels = z[feas]
    same = np.isin(z, levels)
    i0 = int(np.flatnonzero(same)[-1])
    a0 = float(a[i0])
    left = float(z[i0])
    right = float(a[i0] + e[i0 + 1]) if i0 + 1 < a.size else math.inf
    forms = {"sup": sup_form, "inf": inf_form, "zeta_left": left, "a0_plus_eta": right}
    if feas[-1]:
        flags.append("sup-form truncated by grid")
        value = inf_form
    else:
        value = sup_form
        if not _close(sup_form, inf_form, tol) and not (sup_form >= inf_form - tol and math.isinf(inf_form)):
            flags.append("dual forms disagree")
    return ExponentResult(value, a0, "b-e-rates", tuple(flags), forms)


def b_e_forms_agree(result: ExponentResult, tol):
    """Whether the four B_e forms coincide within ``tol`` (truncated sups excluded)."""
    f = result.forms
    if "sup-form truncated by grid" in result.flags or "empty constraint set" in result.flags:
        return _close(f["inf"], result.value, tol)
    vals = [f["sup"], f["inf"], f["zeta_left"], f["a0_plus_eta"]]
    return all(_close(v, vals[0], tol) for v in vals[1:])


def B_e_star_from_rates(zeta_c: RateFunction, r, check=True):
    """Strong-converse exponent: sup_a min{zeta_c, r+a} = inf_a max{zeta_c, r+a} = r + a0*.

    The value is the sup-form, which is exact at grid points; r + a0*
    with a0* = max{a_i : zeta_c(a_i) - a_i >= r} is reported with it.
    """
    a = zeta_c.grid
    zc = zeta_c.values
    tol = grid_tolerance(a)
    sup_form = float(np.max(np.minimum(zc, r + a)))
    inf_form = float(np.min(np.maximum(zc, r + a)))
    hit = np.flatnonzero(zc - a >= r)
    if hit.size == 0:
        a0 = -math.inf
        crossing = sup_form
    else:
        a0 = float(a[hit[-1]])
        crossing = r + a0
    forms = {"sup": sup_form, "inf": inf_form, "r_plus_a0": crossing}
    flags = []
    if hit.size == a.size:
        flags.append("crossing beyond grid")
    if not (_close(sup_form, inf_form, tol) and _close(crossing, sup_form, tol)):
        flags.append("dual forms disagree")
        if check and "crossing beyond grid" not in flags and hit.size:
            raise PropertyFailure(f"strong-converse forms disagree: {forms}")
    return ExponentResult(sup_form, a0, "b-e-star-rates", tuple(flags), forms)


def B_e_star_star(zeta_c: RateFunction, r):
    """r - a0** with a0** = inf{a : zeta_c(a) <= r}, located on the grid."""
    a = zeta_c.grid
    zc = zeta_c.values
    # zeta_c is nonincreasing, so {zeta_c <= r} is a suffix of the grid
    k = int(np.searchsorted(-zc, -r, side="left"))
    if k >= a.size:
        return ExponentResult(-math.inf, math.inf, "b-e-star-star", ("crossing beyond grid",))
    flags = ("crossing below grid",) if k == 0 else ()
    a0 = float(a[k])
    return ExponentResult(r - a0, a0, "b-e-star-star", flags)


def dual_of_B_e_star(zeta_c: RateFunction, r, r_grid):
    """sup{r' in r_grid : B_e*(r') <= r}, the dual that B_e_star_star resolves."""
    ok = [rp for rp in r_grid if B_e_star_from_rates(zeta_c, rp, check=False).value <= r]
    return max(ok) if ok else -math.inf


def _maximize(f: Callable[[float], float], lo, hi):
    """Maximize a unimodal f on [lo, hi]: bounded Brent plus both endpoints."""
    res = minimize_scalar(lambda t: -f(t), bounds=(lo, hi), method="bounded", options={"xatol": THETA_XTOL})
    cands = [(float(-res.fun), float(res.x)), (f(lo), lo), (f(hi), hi)]
    return max(cands, key=lambda c: c[0])


def _psi_of(rho, sigma):
    z, lr = llr_points(rho, sigma)
    return lambda t: cgf(z, lr, t)


def _hoeffding_theta(psi, r, divergence):
    if r < 0:
        raise InputError("r must be nonnegative")
    if r == 0:
        return divergence, 0.0
    f = lambda t: ((1.0 + t) * r + psi(t)) / t  # noqa: E731
    return _maximize(f, -1.0, -THETA_INSET)


def hoeffding_exponent(rho, sigma, r):
    """max over -1 <= theta < 0 of ((1+theta) r + psi(theta)) / theta; r = 0 gives D."""
    value, theta = _hoeffding_theta(_psi_of(rho, sigma), r, kl_divergence(rho, sigma))
    return ExponentResult(value, theta, "hoeffding")


def quantum_hoeffding_lower_bound(rho, sigma, r):
    """The same maximization with psi(theta) = log Tr rho^{1+theta} sigma^{-theta}."""
    psi = QuantumPsi(np.asarray(rho), np.asarray(sigma))
    value, theta = _hoeffding_theta(psi, r, quantum_relative_entropy(np.asarray(rho), np.asarray(sigma)))
    return ExponentResult(value, theta, "quantum-hoeffding")


def han_kobayashi_exponent(rho, sigma, r):
    """max over theta <= -1 of ((1+theta) r + psi(theta)) / theta.

    Bounded search starts on [-40, -1] and widens the bracket fourfold
    while the optimum sits on its left end. The theta -> -inf limit, r plus the
    smallest log-likelihood ratio on supp(rho), competes as an extra
    candidate, since the maximum can sit at infinity. When r is at most
    D(tau_{-1} || rho) the value is -psi(-1), which is exactly 0 whenever
    supp(sigma) lies inside supp(rho).
    """
    if r < 0:
        raise InputError("r must be nonnegative")
    tau1 = tilted_measure(rho, sigma, -1.0)
    if r <= kl_divergence(tau1, rho):
        on = rho.weights > 0
        if np.all(on | (sigma.weights == 0)):
            return ExponentResult(0.0, -1.0, "han-kobayashi")
        return ExponentResult(-classical_psi(rho, sigma, -1.0), -1.0, "han-kobayashi")
    psi = _psi_of(rho, sigma)
    f = lambda t: ((1.0 + t) * r + psi(t)) / t  # noqa: E731
    lo = THETA_FLOOR
    value, theta = _maximize(f, lo, -1.0)
    while theta <= lo * (1 - 1e-9) and lo > THETA_LIMIT:
        lo *= 4.0
        value, theta = _maximize(f, lo, -1.0)
    z, _ = llr_points(rho, sigma)
    limit = r + float(np.min(z))
    flags = ()
    if limit > value:
        value, theta, flags = limit, -math.inf, ("optimum at theta -> -inf",)
    return ExponentResult(value, theta, "han-kobayashi", flags)


def _solve_tilt(rho, sigma, r, lo, hi):
    """theta in [lo, hi] with D(tau_theta || rho) = r (increasing as theta moves from 0)."""
    g = lambda t: kl_divergence(tilted_measure(rho, sigma, t), rho) - r  # noqa: E731
    glo, ghi = g(lo), g(hi)
    if glo * ghi > 0:
        return lo if abs(glo) < abs(ghi) else hi
    return brentq(g, lo, hi, xtol=1e-14, rtol=1e-15)


def hoeffding_tilted(rho, sigma, r):
    """min{D(tau || sigma) : D(tau || rho) <= r} over the tilted family."""
    if r <= 0:
        return kl_divergence(rho, sigma)
    if kl_divergence(tilted_measure(rho, sigma, -1.0), rho) <= r:
        return kl_divergence(tilted_measure(rho, sigma, -1.0), sigma)
    t = _solve_tilt(rho, sigma, r, -1.0, 0.0)
    return kl_divergence(tilted_measure(rho, sigma, t), sigma)


def han_kobayashi_tilted(rho, sigma, r):
    """min{D(tau || sigma) + r - D(tau || rho) : D(tau || rho) <= r}, for r >= D(tau_{-1} || rho)."""
    tau1 = tilted_measure(rho, sigma, -1.0)
    if r <= kl_divergence(tau1, rho):
        return kl_divergence(tau1, sigma) + r - kl_divergence(tau1, rho)
    lo = -2.0
    while kl_divergence(tilted_measure(rho, sigma, lo), rho) < r and lo > -1e4:
        lo *= 2.0
    t = _solve_tilt(rho, sigma, r, lo, -1.0)
    tau = tilted_measure(rho, sigma, t)
    return kl_divergence(tau, sigma) + r - kl_divergence(tau, rho)


@dataclass(frozen=True)
class TiltedTest:
    test: object
    evaluation: object
    tilted: bool
    eta_s: float


def construct_tilted_test(pair, a, r, n, mode="strict", cap=DEFAULT_BRUTE_CAP):
    """S_n(a) topped up on its complement so that alpha_n = e^{-nr} exactly.

    Classical pairs act on the product alphabet of m**n sequences, quantum
    pairs on the full tensor power; both are bounded by ``cap``.
    """
    if n < 1:
        raise InputError("block length must be positive")
    if is_classical_pair(pair):
        rho, sigma = pair
        if rho.size**n > cap:
            raise SizeError(f"product alphabet {rho.size ** n} exceeds cap {cap}", size=rho.size**n)
        rn, sn = rho.iid_power(n), sigma.iid_power(n)
        s = classical_np_test(rn, sn, a, n=n, tie=mode).accept
        ev = evaluate_test(rn, sn, ClassicalTest(s), n=n)
        make = ClassicalTest
        evaluate = lambda t: evaluate_test(rn, sn, t, n=n)  # noqa: E731
        comp = 1.0 - s
    else:
        rn = tensor_power(np.asarray(pair[0]), n, cap)
        sn = tensor_power(np.asarray(pair[1]), n, cap)
        s = np_projections(rn, sn, a, n=n, modes=(mode,))[mode]
        ev = evaluate_quantum_test(rn, sn, s, n=n)
        make = lambda t: t  # noqa: E731
        evaluate = lambda t: evaluate_quantum_test(rn, sn, t, n=n)  # noqa: E731
        comp = np.eye(rn.shape[0]) - s
    if ev.eta >= r:
        return TiltedTest(make(s), ev, False, ev.eta)
    if ev.alpha <= 0.0:
        raise InputError("alpha_n(a) = 0 cannot fall short of r")
    # alpha[T] = e^{-n(r - eta)} alpha(a) = e^{-nr}
    w = -math.expm1(-n * (r - ev.eta))
    t = make(s + w * comp)
    tev = evaluate(t)
    target = math.exp(-n * r)
    if abs(tev.alpha - target) > 1e-12 * target + 1e-15:
        raise PropertyFailure(f"tilted test alpha {tev.alpha!r} != e^(-nr) {target!r}")
    if tev.zeta_c > r + a + 1e-9:
        raise PropertyFailure(f"tilted test zeta_c {tev.zeta_c!r} exceeds r + a = {r + a!r}")
    return TiltedTest(t, tev, True, ev.eta)


def _han_condition_bound(zeta_c: RateFunction):
    """zeta_c(-inf) - sup{a : zeta_c(a) = zeta_c(-inf)}, resolved on the grid."""
    a, zc = zeta_c.grid, zeta_c.values
    top = zc[0]
    if math.isinf(top):
        return math.inf
    same = np.flatnonzero(np.isclose(zc, top, rtol=0.0, atol=1e-12))
    return float(top - a[same[-1]])


def han_expression(eta: RateFunction, r):
    """inf_a {a + eta(a) + [r - eta(a)]_+} on the grid."""
    a, e = eta.grid, eta.values
    with np.errstate(invalid="ignore"):
        vals = a + e + np.maximum(r - e, 0.0)
    vals = np.where(np.isnan(vals), math.inf, vals)
    return float(np.min(vals))


@dataclass(frozen=True)
class HanReport:
    han_value: float
    theorem4_value: float
    condition_holds: bool
    equal: bool
    condition_bound: float

    def as_dict(self):
        return {
            "han_value": self.han_value,
            "theorem4_value": self.theorem4_value,
            "condition_holds": self.condition_holds,
            "equal": self.equal,
        }


def han_formula_check(eta: RateFunction, zeta_c: RateFunction, r):
    """Compare Han's expression with the strong-converse exponent at r.

    The expression is never below the exponent; they coincide when
    r <= zeta_c(-inf) - sup{a : zeta_c(a) = zeta_c(-inf)}.
    """
    _shared_grid(eta, zeta_c)
    tol = grid_tolerance(eta.grid)
    han = han_expression(eta, r)
    b = B_e_star_from_rates(zeta_c, r, check=False).value
    bound = _han_condition_bound(zeta_c)
    if han < b - tol:
        raise PropertyFailure(f"Han expression {han!r} below the exponent {b!r}")
    return HanReport(han, b, bool(r <= bound), _close(han, b, tol), bound)


def two_point_rates(c, grid):
    """Limiting (eta, zeta_c) of the two-point family whose rho-mass on x0 decays superexponentially."""
    grid = np.asarray(grid, dtype=float)
    eta = np.where(grid > 0, 0.0, math.inf)
    zc = np.where(grid > 0, 0.0, float(c))
    return RateFunction(grid, eta, "eta_lower"), RateFunction(grid, zc, "zeta_c_upper")


def two_point_B_e_star(c, r):
    """The closed form: c for r >= c, r on [0, c], 0 below."""
    return float(min(max(r, 0.0), c))


@dataclass(frozen=True)
class AtomModel:
    """Limiting rates of an exponential-family toy model.

    Atom k carries rho-rate u_k at spectral value z_k, hence sigma-rate
    u_k + z_k. Rates of S(a) are minima over the atoms on each side of a.
    """

    z: np.ndarray
    u: np.ndarray

    def eta(self, grid):
        return RateFunction(grid, [self._min(self.u, self.z <= a) for a in grid], "eta_lower")

    def zeta(self, grid):
        return RateFunction(grid, [self._min(self.u + self.z, self.z > a) for a in grid], "zeta_lower")

    def zeta_c(self, grid):
        return RateFunction(grid, [self._min(self.u + self.z, self.z <= a) for a in grid], "zeta_c_upper")

    @staticmethod
    def _min(x, mask):
        return float(np.min(x[mask])) if mask.any() else math.inf


def random_atom_model(rng, grid, k_max=6):
    """A random AtomModel with atoms on grid points and both measures of unit total.

    One atom at z >= 0 has rho-rate 0 and one at z <= 0 has sigma-rate 0,
    so both limiting measures are normalized.
    """
    grid = np.asarray(grid, dtype=float)
    neg = np.flatnonzero(grid <= 0)
    pos = np.flatnonzero(grid >= 0)
    if neg.size == 0 or pos.size == 0:
        raise InputError("grid must straddle 0")
    k = int(rng.integers(2, k_max + 1))
    idx = set(rng.choice(grid.size, size=k, replace=True).tolist())
    i_rho = int(rng.choice(pos))
    i_sig = int(rng.choice(neg))
    idx |= {i_rho, i_sig}
    idx = np.array(sorted(idx))
    z = grid[idx]
    u = np.maximum(0.0, -z) + rng.exponential(0.3, size=z.size)
    u[idx == i_rho] = 0.0
    if i_sig != i_rho:
        u[idx == i_sig] = -grid[i_sig]
    return AtomModel(z, u)
