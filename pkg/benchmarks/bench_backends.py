"""Benchmark the numba kernels against the pure-numpy fallbacks.

Run:
    python benchmarks/bench_backends.py

The same arrays go through both implementations; the printed max
relative difference doubles as a consistency check.  Select the numpy
path at import time for the whole package by setting the environment
variable ODDMSQUINT_NO_NUMBA=1 instead.
"""

import time

import numpy as np

from oddmsquint import _accel
from oddmsquint.channel import KMH, gen_tdlc
from oddmsquint.core import FrameConfig


def timeit(fn, *args, repeat=3):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    if not _accel.HAS_NUMBA:
        print("numba not available; nothing to compare")
        return
    cfg = FrameConfig(M=1024, N=64, f_s=15.36e6, f_c=5.0e9, Q=8, beta=0.1)
    ch = gen_tdlc(300e-9, 750 * KMH, seed=1, cfg=cfg)
    ls, ks = ch.delays_taps(), ch.dopplers_bins()
    bs, hs = ch.scalings(), ch.gains()
    L = 57
    print(f"frame M={cfg.M} N={cfg.N}, P={ch.P} paths, {L} delay taps")

    # warm the JIT outside the timed region
    _accel._tap_kernel_nb(np.zeros((L, cfg.M, cfg.N), np.complex128),
                          ls, ks, bs, hs, cfg.beta, cfg.Q,
                          *_tables(cfg.beta, cfg.Q))

    t_nb, g_nb = timeit(lambda: _accel._tap_kernel_nb(
        np.zeros((L, cfg.M, cfg.N), np.complex128), ls, ks, bs, hs,
        cfg.beta, cfg.Q, *_tables(cfg.beta, cfg.Q)))
    t_np, g_np = timeit(lambda: _accel._tap_kernel_numpy(
        np.zeros((L, cfg.M, cfg.N), np.complex128), ls, ks, bs, hs,
        cfg.beta, cfg.Q))
    diff = np.max(np.abs(g_nb - g_np)) / np.max(np.abs(g_np))
    print(f"tap kernel      numba {t_nb * 1e3:8.1f} ms   numpy {t_np * 1e3:8.1f} ms "
          f"  speedup {t_np / t_nb:5.2f}x   rel maxdiff {diff:.2e}")

    rng = np.random.default_rng(0)
    G = (rng.standard_normal((24, 256, 32)) + 1j * rng.standard_normal((24, 256, 32)))
    X = rng.standard_normal((256, 32)) + 1j * rng.standard_normal((256, 32))
    _accel._apply_rcp_nb(G, X)
    _accel._apply_zp_nb(G, X)

    t_nb, y_nb = timeit(lambda: _accel._apply_rcp_nb(G, X))
    t_np, y_np = timeit(lambda: _accel._apply_rcp_numpy(G, X))
    diff = np.max(np.abs(y_nb - y_np)) / np.max(np.abs(y_np))
    print(f"apply (cyclic)  numba {t_nb * 1e3:8.1f} ms   numpy {t_np * 1e3:8.1f} ms "
          f"  speedup {t_np / t_nb:5.2f}x   rel maxdiff {diff:.2e}")

    t_nb, y_nb = timeit(lambda: _accel._apply_zp_nb(G, X))
    t_np, y_np = timeit(lambda: _accel._apply_zp_numpy(G, X))
    diff = np.max(np.abs(y_nb - y_np)) / np.max(np.abs(y_np))
    print(f"apply (padded)  numba {t_nb * 1e3:8.1f} ms   numpy {t_np * 1e3:8.1f} ms "
          f"  speedup {t_np / t_nb:5.2f}x   rel maxdiff {diff:.2e}")


def _tables(beta, q):
    j = np.arange(-q + 1, q + 1)
    return (np.cos(np.pi * beta * j), np.sin(np.pi * beta * j),
            np.where(j % 2 == 0, -1.0, 1.0))


if __name__ == "__main__":
    main()
