"""Dense Hermitian linear algebra and scalar special functions.

Everything downstream (covariance models, Fisher information, error
exponents, the bound itself) funnels through the handful of kernels in
this module, so they are written defensively: explicit shape checks,
a single jittered retry on Cholesky failure, and log-domain forms for
quantities that overflow in the natural parametrization.

Complex matrices are plain ``numpy.ndarray`` with dtype ``complex128``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import log_ndtr

from .errors import DimensionMismatch, NotPositiveDefinite

# Relative jitter added to the diagonal on a failed factorization, and the
# relative tolerance used when deciding whether a matrix counts as Hermitian.
JITTER_REL = 1e-12
HERMITIAN_RTOL = 1e-12

_SQRT2 = math.sqrt(2.0)
_LGAMMA_3_2 = math.lgamma(1.5)


def _as_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} has non-finite entries")
    return a


def hermitian_defect(a: np.ndarray) -> float:
    """Relative departure of ``a`` from its conjugate transpose.

    Returns ``max|A - A^H| / max(1, max|A|)``, so the result is 0 exactly
    when the matrix is Hermitian and is insensitive to overall scale.
    """
    a = _as_square(a)
    scale = max(1.0, float(np.abs(a).max(initial=0.0)))
    return float(np.abs(a - a.conj().T).max(initial=0.0)) / scale


def is_hermitian(a: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    return hermitian_defect(a) <= rtol


def jittered_cholesky(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor with a single diagonal-jitter retry.

    On the first failure, ``trace(a)/n * 1e-12`` is added to the diagonal
    and the factorization retried once; a second failure raises
    :class:`NotPositiveDefinite`. The jitter is relative to the mean
    eigenvalue, so well-scaled matrices are unaffected.
    """
    a = _as_square(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        pass
    n = a.shape[0]
    bump = JITTER_REL * float(np.real(np.trace(a))) / n
    try:
        return np.linalg.cholesky(a + bump * np.eye(n, dtype=a.dtype))
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite(
            f"matrix of size {n} is not positive definite "
            f"(jitter {bump:.3e} did not help)") from None


@dataclass(frozen=True)
class HermitianPD:
    """A Hermitian positive definite matrix with its cached Cholesky factor.

    Construction validates finiteness and Hermitian symmetry (relative
    tolerance 1e-12) and factors the matrix immediately, so holding an
    instance is proof that the factorization succeeded with strictly
    positive pivots.
    """

    matrix: np.ndarray
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        a = _as_square(self.matrix, "HermitianPD")
        if not is_hermitian(a):
            raise ValueError(
                f"matrix is not Hermitian (relative defect "
                f"{hermitian_defect(a):.3e} > {HERMITIAN_RTOL:g})")
        a = np.ascontiguousarray(a, dtype=complex)
        a.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "chol", jittered_cholesky(a))

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def min_pivot(self) -> float:
        """Smallest squared Cholesky pivot (a lower bound proxy on eigenvalues)."""
        return float(np.min(np.real(np.diag(self.chol))) ** 2)


def _chol_of(a) -> np.ndarray:
    if isinstance(a, HermitianPD):
        return a.chol
    return jittered_cholesky(np.asarray(a, dtype=complex))


def logdet_hpd(a) -> float:
    """``log det A`` for Hermitian positive definite ``a``.

    Computed as twice the sum of the logs of the Cholesky pivots, which
    stays finite for determinants far outside double range. Accepts a
    :class:`HermitianPD` (reusing its cached factor) or a raw array.
    """
    c = _chol_of(a)
    return 2.0 * float(np.sum(np.log(np.real(np.diag(c)))))


def solve_hpd(a, b: np.ndarray) -> np.ndarray:
    """Solve ``A X = B`` with ``A`` Hermitian positive definite.

    Two triangular solves against the (cached) Cholesky factor.
    """
    c = _chol_of(a)
    b = np.asarray(b, dtype=complex)
    if b.shape[0] != c.shape[0]:
        raise DimensionMismatch(
            f"rhs has {b.shape[0]} rows, matrix has {c.shape[0]}")
    y = solve_triangular(c, b, lower=True, check_finite=False)
    return solve_triangular(c, y, lower=True, trans="C", check_finite=False)


class TraceSquared(NamedTuple):
    value: float
    imag_residual: float


def trace_product_squared(a: np.ndarray) -> TraceSquared:
    """``Re tr(A @ A)`` together with the discarded imaginary residual.

    The curvature term of the error exponent is ``tr((R_+^{-1} R_-)^2)``,
    which is real in exact arithmetic; the imaginary residual is returned
    so callers can assert it stayed at rounding level.
    """
    a = _as_square(a)
    t = complex(np.einsum("ij,ji->", a, a))
    return TraceSquared(t.real, abs(t.imag))


def q_function(z):
    """Gaussian right-tail probability ``Q(z)``, elementwise.

    Evaluated through ``erfc`` rather than ``1 - Phi(z)`` so the tail is
    accurate to machine precision; saturates to exactly 0.0 / 1.0 in the
    far tails instead of returning denormals.
    """
    from scipy.special import erfc
    z = np.asarray(z, dtype=float)
    out = 0.5 * erfc(z / _SQRT2)
    if out.ndim == 0:
        return float(out)
    return out


def log_q_function(z):
    """``log Q(z)``, finite out to very large ``z`` (log-domain tail)."""
    z = np.asarray(z, dtype=float)
    out = log_ndtr(-z)
    if out.ndim == 0:
        return float(out)
    return out


def gamma_32(u: float) -> float:
    """Regularized lower incomplete gamma function of order 3/2.

    ``P(3/2, u) = gamma(3/2, u) / Gamma(3/2)``; this is the weight the
    bound places on the CRB-like term, rising from 0 at ``u = 0`` to 1
    as the effective detection argument grows.

    Series expansion for ``u < 10``, continued fraction for the upper
    complement at ``u >= 10`` (both to machine precision).
    """
    if not np.isfinite(u):
        if u > 0:
            return 1.0
        raise ValueError(f"gamma_32 argument must be finite or +inf, got {u}")
    if u < 0.0:
        raise ValueError(f"gamma_32 argument must be nonnegative, got {u}")
    if u == 0.0:
        return 0.0
    a = 1.5
    if u < 10.0:
        # power series for the lower function
        term = 1.0 / a
        total = term
        n = 0
        while True:
            n += 1
            term *= u / (a + n)
            total += term
            if abs(term) < abs(total) * 1e-16:
                break
            if n > 500:  # unreachable for u < 10
                break
        return total * math.exp(-u + a * math.log(u) - _LGAMMA_3_2)
    # modified Lentz continued fraction for the upper complement
    tiny = 1e-300
    b = u + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 200):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    upper = math.exp(-u + a * math.log(u) - _LGAMMA_3_2) * h
    return 1.0 - upper
