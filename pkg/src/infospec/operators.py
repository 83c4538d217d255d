"""
Dense Hermitian linear algebra.

Operators are plain numpy arrays. The constructors here validate and
symmetrize them and hand back read-only copies, so values can be shared
freely between threads.
"""
import math
from typing import Callable, NamedTuple

import numpy as np

from .errors import DomainError, EigenError, InputError, SizeError

HERMITIAN_ATOL = 1e-12
DENSITY_ATOL = 1e-10
ZERO_RTOL = 1e-11
LOG_FLOOR = 1e-300
DEFAULT_BRUTE_CAP = 2**10
SIGN_MAX_ITER = 80


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns


def _frozen(a):
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def as_hermitian(a, atol=HERMITIAN_ATOL):
    """Validate a square Hermitian matrix and return its symmetrized copy.

    Real input stays real so that the eigensolver can take the cheaper
    symmetric path.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"expected a nonempty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError("matrix has non-finite entries")
    if np.iscomplexobj(a):
        if max_abs(a.imag) == 0.0:
            a = a.real
        else:
            a = a.astype(complex)
    a = a.astype(float) if not np.iscomplexobj(a) else a
    asym = max_abs(a - a.conj().T)
    if asym > atol:
        raise InputError(f"matrix is not Hermitian (asymmetry {asym:.3e} > {atol:g})")
    return _frozen((a + a.conj().T) / 2)


def as_density(a, atol=HERMITIAN_ATOL):
    a = as_hermitian(a, atol=atol)
    w = np.linalg.eigvalsh(a)
    if w[0] < -DENSITY_ATOL:
        raise InputError(f"density operator has negative eigenvalue {w[0]:.3e}")
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > DENSITY_ATOL:
        raise InputError(f"density operator has trace {tr!r}")
    return a


def eig_tolerance(w):
    """Zero band for a spectrum: |lambda| <= 1e-11 * (spectral norm).

    Tying the band to the spectral norm keeps it invariant under unitary
    changes of basis and under positive rescaling, so a block-diagonal
    computation and a dense one classify eigenvalues identically.
    """
    w = np.asarray(w)
    return ZERO_RTOL * float(np.max(np.abs(w))) if w.size else 0.0


def zero_tolerance(a):
    """Band inside which an eigenvalue of ``a`` counts as zero."""
    return eig_tolerance(np.linalg.eigvalsh(a))


def spectral_decompose(a):
    a = np.asarray(a)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError:
        raise EigenError(a.shape[0]) from None
    if not np.all(np.isfinite(w)):
        raise EigenError(a.shape[0], residual=float("inf"))
    return SpectralDecomposition(w, v)


def projector_from_eigh(w, v, tol, mode="strict"):
    """Sum of eigenprojections selected by an eigenvalue threshold.

    strict keeps lambda > tol, nonstrict keeps lambda >= -tol.
    """
    if mode == "strict":
        keep = w > tol
    elif mode == "nonstrict":
        keep = w >= -tol
    else:
        raise InputError(f"unknown mode {mode!r}")
    vk = v[:, keep]
    return vk @ vk.conj().T


def positive_part_projection(a, mode="strict"):
    """The projection {A > 0} (strict) or {A >= 0} (nonstrict)."""
    w, v = spectral_decompose(a)
    return projector_from_eigh(w, v, eig_tolerance(w), mode)


def _norm1(x):
    return float(np.abs(x).sum(axis=0).max())


def matrix_sign(a, max_iter=SIGN_MAX_ITER):
    """sign(A) for a nonsingular Hermitian A by the scaled Newton iteration.

    X <- (mu X + X^{-1} / mu) / 2 with mu = sqrt(|X^{-1}|_1 / |X|_1). Unlike an
    eigensolver, whose error is relative to the largest eigenvalue, LU-based
    inversion keeps the small entries of strongly graded matrices accurate,
    so (I + sign A) / 2 resolves projections that eigh blurs. Raises
    EigenError when A is numerically singular or the iteration stalls.
    """
    x = np.array(a, dtype=np.result_type(a, float))
    dim = x.shape[0]
    for _ in range(max_iter):
        try:
            xi = np.linalg.inv(x)
        except np.linalg.LinAlgError:
            raise EigenError(dim) from None
        nx, ni = _norm1(x), _norm1(xi)
        if not (math.isfinite(ni) and ni > 0):
            raise EigenError(dim, residual=math.inf)
        mu = math.sqrt(ni / nx)
        new = 0.5 * (mu * x + xi / mu)
        new = 0.5 * (new + new.conj().T)
        step = _norm1(new - x)
        x = new
        if step <= 1e-14 * _norm1(x):
            resid = max_abs(x @ x - np.eye(dim))
            if resid > 1e-8:
                raise EigenError(dim, residual=resid)
            return x
    raise EigenError(dim, residual=step)


def is_positive_definite(a):
    """Cholesky succeeds. Reliable on graded matrices, where eigh is not."""
    try:
        np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False
    return True


def matrix_function(a, f: Callable, *, floor=None, policy="reject"):
    """Apply ``f`` to the eigenvalues of ``a``: V f(L) V^dagger.

    If ``floor`` is given, eigenvalues below it are outside the domain of
    ``f``; ``policy="clip"`` raises them to ``floor`` while
    ``policy="reject"`` raises DomainError.
    """
    w, v = spectral_decompose(a)
    if floor is not None:
        bad = w < floor
        if np.any(bad):
            if policy == "clip":
                w = np.maximum(w, floor)
            elif policy == "reject":
                lam = float(w[bad][0])
                raise DomainError(f"eigenvalue {lam:.6e} outside the domain of f", eigenvalue=lam)
            else:
                raise InputError(f"unknown domain policy {policy!r}")
    fw = np.asarray(f(w))
    out = (v * fw) @ v.conj().T
    return as_hermitian(out, atol=np.inf)


def matrix_log(a, full_support=False):
    # Off-support eigenvalues make log undefined; clipping them would hide
    # an infinite divergence, so only full-support operators are clipped.
    if full_support:
        return matrix_function(a, np.log, floor=LOG_FLOOR, policy="clip")
    return matrix_function(a, np.log, floor=np.nextafter(0.0, 1.0), policy="reject")


def matrix_power(a, p, full_support=False):
    if p >= 0:
        tol = zero_tolerance(a)
        return matrix_function(a, lambda w: np.where(w > tol, np.abs(w), 0.0) ** p,
                               floor=-tol, policy="reject")
    if full_support:
        return matrix_function(a, lambda w: w**p, floor=LOG_FLOOR, policy="clip")
    return matrix_function(a, lambda w: w**p, floor=np.nextafter(0.0, 1.0), policy="reject")


def tensor_power(a, n, cap=DEFAULT_BRUTE_CAP):
    """Kronecker power; the first factor owns the most significant index block."""
    a = np.asarray(a)
    if n < 1:
        raise InputError("tensor power needs n >= 1")
    size = a.shape[0] ** n
    if size > cap:
        raise SizeError(f"tensor power of dimension {size} exceeds cap {cap}", size=size)
    out = a
    for _ in range(n - 1):
        out = np.kron(out, a)
    return out


def diagonal_in_basis(x, v):
    """Real diagonal of V^dagger X V, i.e. <v_i|X|v_i> for each column."""
    return np.einsum("ji,ji->i", v.conj(), np.asarray(x) @ v).real


def trace_pair(a, b):
    """Re Tr(AB), checking that the imaginary part is rounding noise."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch {a.shape} vs {b.shape}")
    t = complex(np.einsum("ij,ji->", a, b))
    if abs(t.imag) > 1e-10 * max(1.0, abs(t.real)):
        raise InputError(f"Tr(AB) has imaginary part {t.imag:.3e}; inputs not Hermitian?")
    return t.real


def support_projection(a):
    w, v = spectral_decompose(a)
    return projector_from_eigh(w, v, eig_tolerance(w), "strict")


def null_projection(a):
    w, v = spectral_decompose(a)
    tol = eig_tolerance(w)
    vk = v[:, np.abs(w) <= tol]
    return vk @ vk.conj().T
