"""Spectral kernels with a numba path and a pure-numpy fallback.

The backend is chosen once at import time. Set ``UNCERT_NUMBA=0`` to force
the numpy path (useful for debugging or when numba is unavailable); any other
value, or leaving it unset, uses numba when it can be imported.

Every kernel takes and returns C-contiguous ``complex128`` arrays. Callers in
:mod:`uncert.linalg` do the validation; kernels assume Hermitian input.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "eigh",
    "eigvalsh",
    "spectral_power",
    "geometric_mean_pd",
    "opnorm",
    "herm_stats",
    "extremes",
    "hermitize",
    "block_apply",
    "numpy_kernels",
    "numba_kernels",
    "warmup",
]


def _np_eigh(h):
    return np.linalg.eigh(h)


def _np_eigvalsh(h):
    return np.linalg.eigvalsh(h)


def _np_spectral_power(h, alpha, cut):
    w, v = np.linalg.eigh(h)
    if alpha == 0.0:
        f = (w > cut).astype(np.float64)
    elif alpha < 0.0:
        f = np.where(w > cut, np.abs(w) ** alpha, 0.0)
    else:
        f = np.maximum(w, 0.0) ** alpha
    out = (v * f) @ v.conj().T
    return 0.5 * (out + out.conj().T), w[0], w[-1]


def _np_geometric_mean_pd(a, b):
    w, v = np.linalg.eigh(a)
    s = np.sqrt(w)
    a_half = (v * s) @ v.conj().T
    a_mhalf = (v / s) @ v.conj().T
    c = a_mhalf @ b @ a_mhalf
    c = 0.5 * (c + c.conj().T)
    wc, vc = np.linalg.eigh(c)
    c_half = (vc * np.sqrt(np.maximum(wc, 0.0))) @ vc.conj().T
    out = a_half @ c_half @ a_half
    return 0.5 * (out + out.conj().T), wc[0]


def _np_opnorm(a):
    return float(np.linalg.norm(a, 2))


def _np_herm_stats(a):
    return float(np.max(np.abs(a - a.conj().T))), float(np.max(np.abs(a)))


def _np_extremes(a):
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    return float(w[0]), float(w[-1])


def _np_hermitize(a):
    return np.ascontiguousarray(0.5 * (a + a.conj().T))


def _np_block_apply(x, bounds, stack, n):
    d = x.diagonal()
    t = np.add.reduceat(d, bounds[:-1])
    return (t @ stack).reshape(n, n)


numpy_kernels = {
    "hermitize": _np_hermitize,
    "block_apply": _np_block_apply,
    "herm_stats": _np_herm_stats,
    "extremes": _np_extremes,
    "opnorm": _np_opnorm,
    "eigh": _np_eigh,
    "eigvalsh": _np_eigvalsh,
    "spectral_power": _np_spectral_power,
    "geometric_mean_pd": _np_geometric_mean_pd,
}


def _build_numba_kernels():
    from ._numba_kernels import KERNELS

    return dict(KERNELS)


def _want_numba():
    return os.environ.get("UNCERT_NUMBA", "1").strip().lower() not in ("0", "false", "no", "off")


numba_kernels = None
if _want_numba():
    try:
        numba_kernels = _build_numba_kernels()
    except ImportError:  # pragma: no cover - numba is an optional speedup
        numba_kernels = None

_active = numba_kernels if numba_kernels is not None else numpy_kernels
BACKEND = "numba" if numba_kernels is not None else "numpy"

eigh = _active["eigh"]
eigvalsh = _active["eigvalsh"]
spectral_power = _active["spectral_power"]
geometric_mean_pd = _active["geometric_mean_pd"]
opnorm = _active["opnorm"]
herm_stats = _active["herm_stats"]
hermitize = _active["hermitize"]
block_apply = _active["block_apply"]
extremes = _active["extremes"]


def warmup() -> float:
    """Run every active kernel once on a 2x2 input; returns the seconds spent.

    With numba this compiles (or loads from the on-disk cache) each kernel,
    so later timings measure the computation alone.
    """
    import time

    t0 = time.perf_counter()
    h = np.ascontiguousarray(np.array([[2.0, 0.5j], [-0.5j, 1.0]], dtype=np.complex128))
    eigh(h)
    eigvalsh(h)
    spectral_power(h, 0.5, 1e-12)
    spectral_power(h, 0.0, 1e-12)
    geometric_mean_pd(h, h)
    opnorm(h)
    herm_stats(h)
    extremes(h)
    hermitize(h)
    block_apply(h, np.array([0, 1, 2], dtype=np.int64), np.ones((2, 1), dtype=np.complex128), 1)
    return time.perf_counter() - t0
