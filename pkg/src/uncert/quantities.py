"""Generalized covariance, variance, correlation and skew information.

Every quantity is computed from ``(phi, rho, A[, B][, alpha])`` where ``phi``
is a :class:`~uncert.algebra.TracialMap`. Arguments may be
:class:`~uncert.algebra.AlgebraElement` instances or dense domain matrices.
Results are :class:`QuantityResult` values living in ``phi``'s codomain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import AlgebraElement, TracialMap, _as_element_matrix
from .errors import NotPhiDensityError, NotPSDError
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    geometric_mean,
    hermitian_defect,
    hermitize,
    is_hermitian,
    lambda_min,
    matrix_power,
    opnorm,
    spectrum_interval,
)

__all__ = [
    "QuantityResult",
    "check_alpha",
    "gen_covariance",
    "gen_variance",
    "gen_covariance_prime",
    "gen_variance_prime",
    "gen_correlation_alpha",
    "skew_information_alpha",
    "corr_prime_alpha",
    "skew_info_prime_alpha",
    "alpha_overlap",
    "j_quantity",
    "u_quantity",
    "kantorovich",
]


@dataclass(frozen=True, eq=False)
class QuantityResult:
    value: np.ndarray
    hermitian: bool
    metadata: dict = field(default_factory=dict)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.value, dtype=dtype)


def check_alpha(alpha) -> float:
    a = float(alpha)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return a


def _mat(x, phi: TracialMap) -> np.ndarray:
    return _as_element_matrix(x, phi.domain)


def _require_density(phi, rho, tol):
    h = hermitize(rho)
    lm = lambda_min(h)
    if lm < -tol.bound(opnorm(h)):
        raise NotPhiDensityError(f"rho is not positive (lambda_min={lm:.3e})")
    out = phi(h)
    defect = opnorm(out - phi.codomain.identity())
    if defect > tol.bound(opnorm(out)):
        raise NotPhiDensityError(f"rho is not a phi-density: ||phi(rho) - I|| = {defect:.3e}")


def _herm_result(v, **meta):
    meta["hermitian_defect"] = hermitian_defect(v)
    return QuantityResult(hermitize(v), True, meta)


def _raw_result(v, **meta):
    return QuantityResult(np.asarray(v), False, meta)


# -- covariance / variance ---------------------------------------------------


def _cov(phi, rho, a, b):
    ad = a.conj().T
    rad = rho @ ad
    return phi(rad @ b) - phi(rad) @ phi(rho @ b)


def _phi_rho_inverse(phi, rho, tol=DEFAULT_TOL):
    p = hermitize(phi(rho))
    lo, _ = spectrum_interval(p)
    if lo <= tol.bound(opnorm(p)):
        raise NotPSDError(f"phi(rho) is not positive definite (lambda_min={lo:.3e})")
    return np.linalg.inv(p)


def _cov_prime(phi, rho, a, b, tol=DEFAULT_TOL, p_inv=None):
    if p_inv is None:
        p_inv = _phi_rho_inverse(phi, rho, tol)
    ad = a.conj().T
    rad = rho @ ad
    return phi(rad @ b) - phi(rad) @ p_inv @ phi(rho @ b)


def gen_covariance(phi, rho, a, b, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    """``phi(rho A^* B) - phi(rho A^*) phi(rho B)`` for a phi-density ``rho``."""
    rho, a, b = _mat(rho, phi), _mat(a, phi), _mat(b, phi)
    if check:
        _require_density(phi, rho, tol)
    v = _cov(phi, rho, a, b)
    if a is b or (np.array_equal(a, b) and is_hermitian(a)):
        return _herm_result(v)
    return _raw_result(v)


def gen_variance(phi, rho, a, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    rho, a = _mat(rho, phi), _mat(a, phi)
    if check:
        _require_density(phi, rho, tol)
    v = _cov(phi, rho, a, a)
    return _herm_result(v) if is_hermitian(a) else _raw_result(v)


def gen_covariance_prime(phi, rho, a, b, tol: Tolerance = DEFAULT_TOL) -> QuantityResult:
    """``phi(rho A^* B) - phi(rho A^*) phi(rho)^{-1} phi(rho B)``; ``rho`` need only be positive."""
    rho, a, b = _mat(rho, phi), _mat(a, phi), _mat(b, phi)
    v = _cov_prime(phi, rho, a, b, tol)
    if a is b or (np.array_equal(a, b) and is_hermitian(a)):
        return _herm_result(v)
    return _raw_result(v)


def gen_variance_prime(phi, rho, a, tol: Tolerance = DEFAULT_TOL) -> QuantityResult:
    rho, a = _mat(rho, phi), _mat(a, phi)
    v = _cov_prime(phi, rho, a, a, tol)
    return _herm_result(v) if is_hermitian(a) else _raw_result(v)


# -- alpha-correlation / skew information --------------------------------


def _powers(rho, alpha, tol=DEFAULT_TOL):
    return matrix_power(rho, 1.0 - alpha, tol), matrix_power(rho, alpha, tol)


def _corr(phi, rho, a, b, alpha, tol=DEFAULT_TOL, pw=None):
    r1, r2 = pw if pw is not None else _powers(rho, alpha, tol)
    ad = a.conj().T
    return phi(rho @ ad @ b) - phi(r1 @ ad @ r2 @ b)


def gen_correlation_alpha(phi, rho, a, b, alpha, tol: Tolerance = DEFAULT_TOL) -> QuantityResult:
    """``phi(rho A^* B) - phi(rho^{1-alpha} A^* rho^alpha B)``."""
    alpha = check_alpha(alpha)
    rho, a, b = _mat(rho, phi), _mat(a, phi), _mat(b, phi)
    v = _corr(phi, rho, a, b, alpha, tol)
    if a is b or (np.array_equal(a, b) and is_hermitian(a)):
        return _herm_result(v, alpha=alpha)
    return _raw_result(v, alpha=alpha)


def skew_information_alpha(phi, rho, a, alpha, tol: Tolerance = DEFAULT_TOL) -> QuantityResult:
    """Wigner-Yanase-Dyson skew information of a self-adjoint ``A``; PSD for tracial positive ``phi``."""
    alpha = check_alpha(alpha)
    rho, a = _mat(rho, phi), _mat(a, phi)
    if not is_hermitian(a):
        raise ValueError("skew information needs a self-adjoint operator; use skew_info_prime_alpha")
    return _herm_result(_corr(phi, rho, a, a, alpha, tol), alpha=alpha)


def _corr_prime(phi, rho, a, b, alpha, tol=DEFAULT_TOL, pw=None):
    pw = pw if pw is not None else _powers(rho, alpha, tol)
    return 0.5 * (_corr(phi, rho, a, b, alpha, tol, pw) + _corr(phi, rho, b.conj().T, a.conj().T, alpha, tol, pw))


def corr_prime_alpha(phi, rho, a, b, alpha, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    """``(Corr^alpha(A, B) + Corr^alpha(B^*, A^*)) / 2`` for a phi-density ``rho``."""
    alpha = check_alpha(alpha)
    rho, a, b = _mat(rho, phi), _mat(a, phi), _mat(b, phi)
    if check:
        _require_density(phi, rho, tol)
    v = _corr_prime(phi, rho, a, b, alpha, tol)
    if a is b or np.array_equal(a, b):
        return _herm_result(v, alpha=alpha)
    return _raw_result(v, alpha=alpha)


def skew_info_prime_alpha(phi, rho, a, alpha, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    """``(I^alpha(A) + I^alpha(A^*)) / 2``; PSD for every ``A``."""
    alpha = check_alpha(alpha)
    rho, a = _mat(rho, phi), _mat(a, phi)
    if check:
        _require_density(phi, rho, tol)
    return _herm_result(_corr_prime(phi, rho, a, a, alpha, tol), alpha=alpha)


def alpha_overlap(phi, rho, a, alpha, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``phi(rho^alpha A rho^{1-alpha} A)``, convex in ``alpha``."""
    rho, a = _mat(rho, phi), _mat(a, phi)
    r1, r2 = matrix_power(rho, alpha, tol), matrix_power(rho, 1.0 - alpha, tol)
    return hermitize(phi(r1 @ a @ r2 @ a))


# -- J and U -----------------------------------------------------------------


def j_quantity(phi, rho, a, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    """``J = 2 V(A) - I(A)`` at ``alpha = 1/2``."""
    rho, a = _mat(rho, phi), _mat(a, phi)
    if not is_hermitian(a):
        raise ValueError("J is defined for self-adjoint operators")
    if check:
        _require_density(phi, rho, tol)
    v = hermitize(_cov(phi, rho, a, a))
    i = hermitize(_corr(phi, rho, a, a, 0.5, tol))
    return QuantityResult(2.0 * v - i, True, {})


def _u_from(i, j, tol):
    """``I # J``, falling back to ``J # I`` when only ``J`` is definite."""
    i_lo, _ = spectrum_interval(i)
    j_lo, _ = spectrum_interval(j)
    if i_lo > tol.bound(opnorm(i)):
        u, meta = geometric_mean(i, j, tol, info=True)
        meta["order"] = "I#J"
    elif j_lo > tol.bound(opnorm(j)):
        u, meta = geometric_mean(j, i, tol, info=True)
        meta["order"] = "J#I"
    else:
        u, meta = geometric_mean(i, j, tol, info=True)
        meta["order"] = "I#J"
    return u, meta


def u_quantity(phi, rho, a, tol: Tolerance = DEFAULT_TOL, *, check: bool = True) -> QuantityResult:
    """``U = I(A) # J(A)``."""
    rho, a = _mat(rho, phi), _mat(a, phi)
    if not is_hermitian(a):
        raise ValueError("U is defined for self-adjoint operators")
    if check:
        _require_density(phi, rho, tol)
    v = hermitize(_cov(phi, rho, a, a))
    i = hermitize(_corr(phi, rho, a, a, 0.5, tol))
    u, meta = _u_from(i, 2.0 * v - i, tol)
    return QuantityResult(u, True, meta)


def kantorovich(m: float, big_m: float) -> float:
    """``(M + m)^2 / (4 M m)`` for ``0 < m <= M``."""
    m, big_m = float(m), float(big_m)
    if not m > 0:
        raise ValueError(f"Kantorovich constant needs m > 0, got {m}")
    if m > big_m:
        raise ValueError(f"Kantorovich constant needs m <= M, got m={m}, M={big_m}")
    return (big_m + m) ** 2 / (4.0 * big_m * m)


def as_element(phi: TracialMap, q: QuantityResult) -> AlgebraElement:
    return AlgebraElement(phi.codomain, q.value)
