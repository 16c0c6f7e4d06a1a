"""Compare the numba kernels in ``uncert._accel`` against their numpy fallbacks.

Run with ``python3 benchmarks/bench_kernels.py [--dims 2,4,6,10] [--reps 20000]``.
Outputs agree to round-off; the timings show where compilation pays off (the
workloads here are thousands of tiny matrices, so per-call overhead dominates).
"""

import argparse
import time

import numpy as np

from uncert import _accel
from uncert.instances import random_hermitian, random_psd


def _inputs(dim, rng):
    h = random_hermitian(dim, rng)
    p = random_psd(dim, rng, shift=0.1)
    q = random_psd(dim, rng, shift=0.1)
    bounds = np.array([0, dim // 2, dim], dtype=np.int64)
    stack = np.ascontiguousarray(rng.standard_normal((2, 4)) + 0j)
    return {
        "hermitize": (h,),
        "block_apply": (h, bounds, stack, 2),
        "herm_stats": (h,),
        "extremes": (h,),
        "opnorm": (h,),
        "eigvalsh": (h,),
        "spectral_power": (p, 0.3, 1e-12),
        "geometric_mean_pd": (p, q),
    }


def _first(out):
    return out[0] if isinstance(out, tuple) else out


def bench(fn, args, reps):
    fn(*args)  # warm up (and compile)
    t0 = time.perf_counter()
    for _ in range(reps):
        fn(*args)
    return (time.perf_counter() - t0) / reps


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", default="2,4,6,10")
    ap.add_argument("--reps", type=int, default=20000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if _accel.numba_kernels is None:
        print("numba unavailable (or UNCERT_NUMBA=0); nothing to compare")
        return
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18} {'dim':>3} {'numpy us':>10} {'numba us':>10} {'speedup':>8} {'max diff':>10}")
    for dim in (int(x) for x in args.dims.split(",")):
        for name, inp in _inputs(dim, rng).items():
            f_np = _accel.numpy_kernels[name]
            f_nb = _accel.numba_kernels[name]
            diff = float(np.max(np.abs(np.asarray(_first(f_np(*inp))) - np.asarray(_first(f_nb(*inp))))))
            t_np = bench(f_np, inp, args.reps)
            t_nb = bench(f_nb, inp, args.reps)
            print(f"{name:<18} {dim:>3} {t_np * 1e6:>10.2f} {t_nb * 1e6:>10.2f} {t_np / t_nb:>8.2f} {diff:>10.1e}")


if __name__ == "__main__":
    main()
