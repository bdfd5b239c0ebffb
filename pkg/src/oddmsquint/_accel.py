"""Hot numeric kernels: numba-compiled with a pure-numpy fallback.

The fallback is selected automatically when numba is missing, or
explicitly by setting the environment variable ``ODDMSQUINT_NO_NUMBA``
to a non-empty value.  Both implementations are always importable so
they can be benchmarked and cross-checked against each other
(``benchmarks/bench_backends.py``).
"""

from __future__ import annotations

import os

import numpy as np

from .core import raised_cosine

try:
    from numba import njit, prange

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not os.environ.get("ODDMSQUINT_NO_NUMBA")


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# time-variant tap kernel
#
# g[l, m, ndot] += h_i * exp(2j*pi*k_i*u/(N*M)) * a(l - l_i + b_i*u),
# u = m + ndot*M, summed over paths, with a(.) the raised-cosine pulse in
# sample units.  Only the <= 2Q+1 taps inside the pulse support are touched.
# ---------------------------------------------------------------------------


def _tap_kernel_numpy(g, ls, ks, bs, hs, beta, q):
    L, M, N = g.shape
    NM = N * M
    u = (np.arange(M, dtype=np.float64)[:, None] + np.arange(N, dtype=np.float64)[None, :] * M)
    for li, ki, bi, hi in zip(ls, ks, bs, hs):
        phase = hi * np.exp(2j * np.pi * ki * u / NM)
        center = li - bi * u
        l_lo = max(0, int(np.ceil(center.min() - q)))
        l_hi = min(L - 1, int(np.floor(center.max() + q)))
        for l in range(l_lo, l_hi + 1):
            g[l] += phase * raised_cosine(l - li + bi * u, beta, q)
    return g


def _apply_rcp_numpy(G, X):
    # Per-tap circular convolution along the Doppler axis; the wrapped
    # delay rows pick up the cyclic-prefix phase applied to the symbol
    # column index before convolving.
    L, M, N = G.shape
    Y = np.zeros((M, N), dtype=np.complex128)
    col_phase = np.exp(-2j * np.pi * np.arange(N) / N)
    Xf = np.fft.fft(X, axis=1)
    Xpf = np.fft.fft(X * col_phase[None, :], axis=1)
    for l in range(L):
        src = (np.arange(M) - l) % M
        rows = np.where(np.arange(M)[:, None] >= l, Xf[src], Xpf[src])
        Y += np.fft.ifft(rows * np.fft.fft(G[l], axis=1), axis=1)
    return Y


def _apply_zp_numpy(G, X):
    L, M, N = G.shape
    Y = np.zeros((M, N), dtype=np.complex128)
    Xf = np.fft.fft(X, axis=1)
    for l in range(L):
        Gf = np.fft.fft(G[l, l:, :], axis=1)
        Y[l:] += np.fft.ifft(Xf[: M - l] * Gf, axis=1)
    return Y


if HAS_NUMBA:

    @njit(cache=True, inline="always")
    def _rc_from_tables(x, jj, spd, cbd, sbd, beta, qf, cbj, sbj, sgnj):
        # Pulse at x = j - delta via angle addition against the per-offset
        # tables: sin(pi*x) = (-1)^(j+1)*sin(pi*delta) and cos(pi*beta*x)
        # = cbj*cbd + sbj*sbd.  Matches core.raised_cosine, including the
        # cancellation-free branch near |2*beta*x| = 1 (threshold 0.0625).
        if x >= qf or x <= -qf:
            return 0.0
        if x == 0.0:
            return 1.0
        if -0.0009765625 < x < 0.0009765625:
            # sin(pi*delta) loses all relative accuracy when the pulse
            # center sits almost exactly on this tap; evaluate directly.
            u = 2.0 * beta * x
            return (np.sin(np.pi * x) / (np.pi * x)) * np.cos(np.pi * beta * x) \
                / (1.0 - u * u)
        u = 2.0 * beta * x
        den = 1.0 - u * u
        if -0.0625 < den < 0.0625:
            ax = abs(x)
            e = beta * ax - 0.5
            sincb = np.sin(np.pi * e) / (np.pi * e) if e != 0.0 else 1.0
            return (sgnj[jj] * spd / (np.pi * x)) * (np.pi / 2.0) * sincb \
                / (1.0 + 2.0 * beta * ax)
        return sgnj[jj] * spd * (cbj[jj] * cbd + sbj[jj] * sbd) / (np.pi * x * den)

    @njit(parallel=True, cache=True)
    def _tap_kernel_nb(g, ls, ks, bs, hs, beta, q, cbj, sbj, sgnj):
        # Per (m, path) the within-symbol sweep advances three unit-modulus
        # rotors instead of re-evaluating transcendentals: the Doppler phase
        # (step exp(2j*pi*k/N)), exp(1j*pi*delta) whose imaginary part is
        # sin(pi*delta), and exp(1j*pi*beta*delta) carrying the roll-off
        # factors.  delta in [0, 1) is the fractional part of the drifting
        # pulse center; integer crossings flip/rotate the rotors in place.
        L, M, N = g.shape
        NM = N * M
        P = ls.shape[0]
        qf = float(q)
        wrap_w = np.exp(1j * np.pi * beta)
        for m in prange(M):
            for i in range(P):
                li = ls[i]
                bi = bs[i]
                rot = np.exp(2j * np.pi * ks[i] / N)
                phase = hs[i] * np.exp(2j * np.pi * ks[i] * m / NM)
                if bi == 0.0:
                    # frozen delay: one pulse profile serves the whole frame
                    n0 = int(np.floor(li))
                    delta = li - n0
                    spd = np.sin(np.pi * delta)
                    cbd = np.cos(np.pi * beta * delta)
                    sbd = np.sin(np.pi * beta * delta)
                    for j in range(-q + 1, q + 1):
                        l = n0 + j
                        if l < 0 or l >= L:
                            continue
                        a = _rc_from_tables(j - delta, j + q - 1, spd, cbd, sbd,
                                            beta, qf, cbj, sbj, sgnj)
                        if a == 0.0:
                            continue
                        ph = phase
                        for nd in range(N):
                            g[l, m, nd] += ph * a
                            ph = ph * rot
                else:
                    step = bi * M
                    rot_z = np.exp(-1j * np.pi * step)
                    rot_w = np.exp(-1j * np.pi * beta * step)
                    center = li - bi * m
                    n0 = int(np.floor(center))
                    delta = center - n0
                    z = np.exp(1j * np.pi * delta)
                    w = np.exp(1j * np.pi * beta * delta)
                    for nd in range(N):
                        spd = z.imag
                        cbd = w.real
                        sbd = w.imag
                        l_lo = max(0, n0 - q + 1)
                        l_hi = min(L - 1, n0 + q)
                        for l in range(l_lo, l_hi + 1):
                            j = l - n0
                            a = _rc_from_tables(j - delta, j + q - 1, spd, cbd,
                                                sbd, beta, qf, cbj, sbj, sgnj)
                            g[l, m, nd] += phase * a
                        phase = phase * rot
                        center = center - step
                        z = z * rot_z
                        w = w * rot_w
                        while center < n0:
                            n0 -= 1
                            z = -z
                            w = w * wrap_w
                        while center >= n0 + 1.0:
                            n0 += 1
                            z = -z
                            w = w * np.conj(wrap_w)
                        delta = center - n0
        return g

    @njit(parallel=True, cache=True)
    def _apply_rcp_nb(G, X):
        L, M, N = G.shape
        Y = np.zeros((M, N), dtype=np.complex128)
        wrap_phase = np.exp(-2j * np.pi * np.arange(N) / N)
        for m in prange(M):
            for l in range(L):
                mp = (m - l) % M
                wrapped = m < l
                for n in range(N):
                    acc = 0.0 + 0.0j
                    for k in range(N):
                        npr = (n - k) % N
                        if wrapped:
                            acc += X[mp, npr] * wrap_phase[npr] * G[l, m, k]
                        else:
                            acc += X[mp, npr] * G[l, m, k]
                    Y[m, n] += acc
        return Y

    @njit(parallel=True, cache=True)
    def _apply_zp_nb(G, X):
        L, M, N = G.shape
        Y = np.zeros((M, N), dtype=np.complex128)
        for m in prange(M):
            lmax = min(L - 1, m)
            for l in range(lmax + 1):
                for n in range(N):
                    acc = 0.0 + 0.0j
                    for k in range(N):
                        acc += X[m - l, (n - k) % N] * G[l, m, k]
                    Y[m, n] += acc
        return Y


def tap_kernel(L: int, M: int, N: int, ls, ks, bs, hs, beta: float, q: int) -> np.ndarray:
    """Accumulate the multipath tap response on an (L, M, N) grid."""
    g = np.zeros((L, M, N), dtype=np.complex128)
    ls = np.ascontiguousarray(ls, dtype=np.float64)
    ks = np.ascontiguousarray(ks, dtype=np.float64)
    bs = np.ascontiguousarray(bs, dtype=np.float64)
    hs = np.ascontiguousarray(hs, dtype=np.complex128)
    beta = float(beta)
    q = int(q)
    if USE_NUMBA:
        j = np.arange(-q + 1, q + 1)
        cbj = np.cos(np.pi * beta * j)
        sbj = np.sin(np.pi * beta * j)
        sgnj = np.where(j % 2 == 0, -1.0, 1.0)  # (-1)^(j+1)
        return _tap_kernel_nb(g, ls, ks, bs, hs, beta, q, cbj, sbj, sgnj)
    return _tap_kernel_numpy(g, ls, ks, bs, hs, beta, q)


def apply_rcp_kernel(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Banded matrix-vector product for cyclic-prefix framing."""
    if USE_NUMBA:
        return _apply_rcp_nb(G, X)
    return _apply_rcp_numpy(G, X)


def apply_zp_kernel(G: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Banded matrix-vector product for zero-padded framing (linear in delay)."""
    if USE_NUMBA:
        return _apply_zp_nb(G, X)
    return _apply_zp_numpy(G, X)
