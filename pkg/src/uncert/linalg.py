"""Dense Hermitian linear algebra.

All matrix functions go through a single spectral-decomposition path
(:func:`uncert._accel.spectral_power`), so every derived quantity shares one
error model. Matrices are plain ``numpy`` arrays; a "Hermitian matrix" is an
array that has been passed through :func:`hermitize`.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _accel
from .errors import DomainMismatchError, NotPSDError, NumericalError

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "Spectrum",
    "as_matrix",
    "hermitize",
    "hermitian_defect",
    "is_hermitian",
    "eig_hermitian",
    "lambda_min",
    "spectrum_interval",
    "opnorm",
    "matrix_power",
    "matrix_sqrt",
    "matrix_abs",
    "geometric_mean",
    "loewner_geq",
    "is_psd",
    "SchurRoutes",
    "schur_routes",
    "schur_positivity_check",
    "commutator",
    "anticommutator",
    "real_part",
    "imaginary_part",
]


@dataclass(frozen=True)
class Tolerance:
    """Positivity tolerance: ``x`` counts as ``>= 0`` when ``x >= -(abs + rel*scale)``."""

    rel: float = 1e-8
    abs: float = 1e-10

    def __post_init__(self):
        for name in ("rel", "abs"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"tolerance {name} must be finite and >= 0, got {v!r}")

    def bound(self, scale: float = 1.0) -> float:
        return self.abs + self.rel * max(float(scale), 1.0)

    def to_dict(self) -> dict:
        return {"rel": self.rel, "abs": self.abs}

    @classmethod
    def from_dict(cls, d) -> "Tolerance":
        return cls(rel=float(d.get("rel", 1e-8)), abs=float(d.get("abs", 1e-10)))


DEFAULT_TOL = Tolerance()

_HERM_REL = 1e-12


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_matrix(m) -> np.ndarray:
    """Coerce to a C-contiguous complex128 square matrix."""
    if _is_square_c(m):
        if not np.isfinite(m).all():
            raise ValueError("matrix has non-finite entries")
        return m
    a = np.ascontiguousarray(m, dtype=np.complex128)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainMismatchError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _is_square_c(m) -> bool:
    return (isinstance(m, np.ndarray) and m.dtype == np.complex128 and m.ndim == 2
            and m.shape[0] == m.shape[1] and m.flags.c_contiguous)


def _square(m) -> np.ndarray:
    # fast path for arrays produced internally; eigensolvers reject non-finite input
    if _is_square_c(m):
        return m
    return as_matrix(m)


def hermitize(m) -> np.ndarray:
    return _accel.hermitize(_square(m))


def hermitian_defect(m) -> float:
    a = _square(m)
    if a.size == 0:
        return 0.0
    return float(_accel.herm_stats(a)[0])


def is_hermitian(m) -> bool:
    a = _square(m)
    if a.size == 0:
        return True
    defect, big = _accel.herm_stats(a)
    return defect <= _HERM_REL * (1.0 + big)


def _eigh(h):
    try:
        return _accel.eigh(h)
    except (np.linalg.LinAlgError, ValueError, ZeroDivisionError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc


def eig_hermitian(h) -> Spectrum:
    """Ascending eigenvalues and a unitary matrix of eigenvectors."""
    w, v = _eigh(hermitize(h))
    return Spectrum(np.asarray(w), np.asarray(v))


def lambda_min(h) -> float:
    """Smallest eigenvalue of the Hermitian part of ``h``."""
    return spectrum_interval(h)[0]


def spectrum_interval(h) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of the Hermitian part of ``h``."""
    try:
        lo, hi = _accel.extremes(_square(h))
    except (np.linalg.LinAlgError, ValueError, ZeroDivisionError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    return float(lo), float(hi)


def opnorm(m) -> float:
    """Spectral norm ``||m||_2``."""
    a = np.asarray(m)
    if a.size == 0:
        return 0.0
    if a.shape == (1, 1):
        return float(abs(a[0, 0]))
    try:
        return float(_accel.opnorm(np.ascontiguousarray(a, dtype=np.complex128)))
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"norm computation failed: {exc}") from exc


def _psd_cut(norm: float, tol: Tolerance) -> float:
    return tol.abs + tol.rel * max(norm, 1.0)


_POWER_CACHE: OrderedDict = OrderedDict()
_POWER_CACHE_SIZE = 32


def matrix_power(p, alpha: float, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``p**alpha`` for positive semidefinite ``p`` (see :func:`_matrix_power`).

    Results are memoized on the matrix bytes, since one state is raised to the
    same exponent by many verifiers. The returned array is read-only.
    """
    h = hermitize(p)
    key = (h.tobytes(), h.shape[0], float(alpha), tol.rel, tol.abs)
    out = _POWER_CACHE.get(key)
    if out is not None:
        _POWER_CACHE.move_to_end(key)
        return out
    out = _matrix_power(h, alpha, tol)
    out.setflags(write=False)
    _POWER_CACHE[key] = out
    if len(_POWER_CACHE) > _POWER_CACHE_SIZE:
        _POWER_CACHE.popitem(last=False)
    return out


def _matrix_power(p, alpha: float, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``p**alpha`` for positive semidefinite ``p``.

    Eigenvalues within tolerance of zero are treated as zero and
    ``0**alpha = 0`` for every ``alpha`` including 0, so ``p**0`` is the
    support projection of ``p``. Negative ``alpha`` needs ``p`` definite.
    """
    h = hermitize(p)
    alpha = float(alpha)
    norm = float(np.max(np.abs(h), initial=0.0)) * h.shape[0]
    cut = _psd_cut(norm, tol)
    try:
        out, wmin, _ = _accel.spectral_power(h, alpha, cut)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    if wmin < -cut:
        raise NotPSDError(f"matrix is not positive semidefinite (lambda_min={wmin:.3e})")
    if alpha < 0 and wmin <= cut:
        raise NotPSDError(f"negative power {alpha} of a singular matrix")
    return out


def matrix_sqrt(p, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    return matrix_power(p, 0.5, tol)


def matrix_abs(a) -> np.ndarray:
    """``|a| = (a^* a)^{1/2}``."""
    a = as_matrix(a)
    g = a.conj().T @ a
    try:
        out, _, _ = _accel.spectral_power(np.ascontiguousarray(0.5 * (g + g.conj().T)), 0.5, 0.0)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalError(f"Hermitian eigensolver failed: {exc}") from exc
    return out


def geometric_mean(a, b, tol: Tolerance = DEFAULT_TOL, *, info: bool = False):
    """Geometric mean ``a # b = a^{1/2} (a^{-1/2} b a^{-1/2})^{1/2} a^{1/2}``.

    ``a`` must be positive definite and ``b`` positive semidefinite. When ``a``
    is only semidefinite within tolerance it is regularized to
    ``a + eps*I`` with ``eps = 1e-10*max(||a||, 1)``; pass ``info=True`` to get
    ``(mean, metadata)`` with ``metadata["regularized"]`` recording that.
    """
    a = hermitize(a)
    b = hermitize(b)
    if a.shape != b.shape:
        raise DomainMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    na = opnorm(a)
    amin, _ = spectrum_interval(a)
    bmin, _ = spectrum_interval(b)
    nb = opnorm(b)
    if bmin < -_psd_cut(nb, tol):
        raise NotPSDError(f"second argument is not PSD (lambda_min={bmin:.3e})")
    cut = _psd_cut(na, tol)
    if amin < -cut:
        raise NotPSDError(f"first argument is indefinite (lambda_min={amin:.3e})")
    meta = {"regularized": False, "epsilon": 0.0}
    if amin <= cut:
        eps = 1e-10 * max(na, 1.0)
        a = a + eps * np.eye(a.shape[0])
        meta = {"regularized": True, "epsilon": eps}
    try:
        out, _ = _accel.geometric_mean_pd(a, b)
    except (np.linalg.LinAlgError, ValueError, ZeroDivisionError) as exc:
        raise NumericalError(f"geometric mean failed: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise NumericalError("geometric mean produced non-finite entries")
    return (out, meta) if info else out


def loewner_geq(a, b, tol: Tolerance = DEFAULT_TOL) -> float:
    """Signed margin ``lambda_min(a - b)``; ``a >= b`` iff it is ``>= -tol.bound(scale)``."""
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DomainMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return lambda_min(a - b)


def is_psd(h, tol: Tolerance = DEFAULT_TOL) -> bool:
    h = hermitize(h)
    return lambda_min(h) >= -tol.bound(opnorm(h))


class SchurRoutes(NamedTuple):
    """Margins from the two positivity routes for ``M = [[a, x], [x^*, b]]``.

    ``schur`` is ``lambda_min(b - x^* a^{-1} x)`` and ``block`` is
    ``lambda_min(M)``. The two live on different scales (``M`` is congruent
    to ``diag(a, S)`` through ``L = [[I, a^{-1} x], [0, I]]``), so the block
    route decides on ``shifted = lambda_min(M + bound * diag(0, I))``, which
    is congruent to ``diag(a, S + bound*I)`` and hence nonnegative exactly
    when ``schur >= -bound``.
    """

    schur: float
    block: float
    shifted: float
    bound: float

    @property
    def schur_psd(self) -> bool:
        return self.schur >= -self.bound

    @property
    def block_psd(self) -> bool:
        return self.shifted >= 0.0


def schur_routes(a, x, b, tol: Tolerance = DEFAULT_TOL) -> SchurRoutes:
    """Two independent positivity verdicts for ``[[a, x], [x^*, b]]`` with ``a > 0``."""
    a = hermitize(a)
    b = hermitize(b)
    x = np.asarray(x, dtype=np.complex128)
    if x.ndim != 2 or x.shape != (a.shape[0], b.shape[0]):
        raise DomainMismatchError(f"off-diagonal block has shape {x.shape}, expected {(a.shape[0], b.shape[0])}")
    na = opnorm(a)
    amin, _ = spectrum_interval(a)
    if amin <= _psd_cut(na, tol):
        raise NotPSDError(f"top-left block is not positive definite (lambda_min={amin:.3e})")
    s = b - x.conj().T @ np.linalg.solve(a, x)
    schur = lambda_min(s)
    n, m = a.shape[0], b.shape[0]
    blk = np.empty((n + m, n + m), dtype=np.complex128)
    blk[:n, :n] = a
    blk[:n, n:] = x
    blk[n:, :n] = x.conj().T
    blk[n:, n:] = b
    bound = tol.bound(max(na, opnorm(b), opnorm(x)))
    block = lambda_min(blk)
    blk[n:, n:] += bound * np.eye(m)
    shifted = lambda_min(blk)
    return SchurRoutes(schur, block, shifted, bound)


def schur_positivity_check(a, x, b, tol: Tolerance = DEFAULT_TOL) -> bool:
    """``[[a, x], [x^*, b]] >= 0`` for positive definite ``a``.

    Decided twice, through the Schur complement and through the block
    spectrum; raises :class:`NumericalError` if the two verdicts differ.
    """
    r = schur_routes(a, x, b, tol)
    if r.schur_psd != r.block_psd:
        raise NumericalError(
            f"Schur complement margin {r.schur:.3e} and shifted block margin {r.shifted:.3e} disagree"
        )
    return bool(r.schur_psd)


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DomainMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DomainMismatchError(f"shape mismatch {a.shape} vs {b.shape}")
    return a @ b + b @ a


def real_part(a) -> np.ndarray:
    """``(a + a^*)/2``."""
    return hermitize(a)


def imaginary_part(a) -> np.ndarray:
    """``(a - a^*)/(2i)``, so that ``a = Re(a) + i Im(a)``."""
    a = as_matrix(a)
    return np.ascontiguousarray((a - a.conj().T) / 2j)
