"""numba versions of the spectral kernels in :mod:`uncert._accel`.

Kept at module level so numba's on-disk cache can key every function,
including the ones that call :func:`_reconstruct`.
"""

import numpy as np
from numba import njit

opts = dict(cache=True, nogil=True)


@njit(**opts)
def _reconstruct(w_f, v):
    n = v.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for k in range(n):
        s = w_f[k]
        if s == 0.0:
            continue
        for i in range(n):
            vi = v[i, k] * s
            for j in range(i, n):
                out[i, j] += vi * np.conj(v[j, k])
    for i in range(n):
        out[i, i] = out[i, i].real
        for j in range(i + 1, n):
            out[j, i] = np.conj(out[i, j])
    return out


@njit(**opts)
def nb_eigh(h):
    return np.linalg.eigh(h)


@njit(**opts)
def nb_eigvalsh(h):
    return np.linalg.eigvalsh(h)


@njit(**opts)
def nb_spectral_power(h, alpha, cut):
    w, v = np.linalg.eigh(h)
    n = w.shape[0]
    f = np.empty(n)
    for k in range(n):
        lam = w[k]
        if alpha == 0.0:
            f[k] = 1.0 if lam > cut else 0.0
        elif alpha < 0.0:
            f[k] = abs(lam) ** alpha if lam > cut else 0.0
        else:
            f[k] = lam ** alpha if lam > 0.0 else 0.0
    return _reconstruct(f, v), w[0], w[n - 1]


@njit(**opts)
def nb_geometric_mean_pd(a, b):
    w, v = np.linalg.eigh(a)
    s = np.sqrt(w)
    a_half = _reconstruct(s, v)
    a_mhalf = _reconstruct(1.0 / s, v)
    c = a_mhalf @ b @ a_mhalf
    c = 0.5 * (c + c.conj().T)
    wc, vc = np.linalg.eigh(c)
    n = wc.shape[0]
    sc = np.empty(n)
    for k in range(n):
        sc[k] = np.sqrt(wc[k]) if wc[k] > 0.0 else 0.0
    c_half = _reconstruct(sc, vc)
    out = a_half @ c_half @ a_half
    return 0.5 * (out + out.conj().T), wc[0]


@njit(**opts)
def nb_opnorm(a):
    w = np.linalg.eigvalsh(a.conj().T @ a)
    top = w[w.shape[0] - 1]
    return np.sqrt(top) if top > 0.0 else 0.0


@njit(**opts)
def nb_herm_stats(a):
    # max |a - a^*| and max |a| in one pass
    n = a.shape[0]
    defect = 0.0
    big = 0.0
    for i in range(n):
        for j in range(n):
            x = abs(a[i, j])
            if x > big:
                big = x
            d = abs(a[i, j] - np.conj(a[j, i]))
            if d > defect:
                defect = d
    return defect, big


@njit(**opts)
def nb_extremes(a):
    h = 0.5 * (a + a.conj().T)
    w = np.linalg.eigvalsh(h)
    return w[0], w[w.shape[0] - 1]


@njit(**opts)
def nb_hermitize(a):
    n = a.shape[0]
    out = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        out[i, i] = a[i, i].real
        for j in range(i + 1, n):
            z = 0.5 * (a[i, j] + np.conj(a[j, i]))
            out[i, j] = z
            out[j, i] = np.conj(z)
    return out


@njit(**opts)
def nb_block_apply(x, bounds, stack, n):
    # block traces of x, then their combination with the target operators
    nb = bounds.shape[0] - 1
    out = np.zeros(n * n, dtype=np.complex128)
    for b in range(nb):
        t = 0j
        for i in range(bounds[b], bounds[b + 1]):
            t += x[i, i]
        if t != 0j:
            for k in range(n * n):
                out[k] += t * stack[b, k]
    return out.reshape((n, n))


KERNELS = {
    "hermitize": nb_hermitize,
    "block_apply": nb_block_apply,
    "herm_stats": nb_herm_stats,
    "extremes": nb_extremes,
    "opnorm": nb_opnorm,
    "eigh": nb_eigh,
    "eigvalsh": nb_eigvalsh,
    "spectral_power": nb_spectral_power,
    "geometric_mean_pd": nb_geometric_mean_pd,
}
