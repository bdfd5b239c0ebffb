"""Shared test utilities: small configs, oracles, brute-force scanners.

The scanners here deliberately re-derive everything from first
principles (direct pulse evaluation over explicit index loops) so they
stay independent of the optimized code paths they check.
"""

import numpy as np

from oddmsquint import (
    ChannelRealization,
    FrameConfig,
    derive_path,
    pulse_eval,
    sync_offset_taps,
)


def make_cfg(M=32, N=8, Q=3, beta=0.4, prefix_mode="RCP", f_s=1000.0, f_c=5000.0):
    return FrameConfig(M=M, N=N, f_s=f_s, f_c=f_c, Q=Q, beta=beta,
                       prefix_mode=prefix_mode)


def max_q(M):
    """Largest pulse half-length the frame-length constraint allows."""
    return (M - 1) // 8


def rel_max_err(a, b):
    scale = np.max(np.abs(b))
    if scale == 0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))) / scale)


def random_offgrid_channel(cfg, c=1500.0, b_max=None, n_paths=3, seed=0,
                           delay_span=3.0):
    """Synchronized random channel with fractional delays and Dopplers."""
    rng = np.random.default_rng(seed)
    if b_max is None:
        b_max = 2.0 / (cfg.N * cfg.M)
    sync = sync_offset_taps(b_max * c, c, cfg)
    b = rng.uniform(-b_max, b_max, n_paths)
    ls = sync + rng.uniform(0.0, delay_span, n_paths)
    hs = rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)
    paths = [derive_path(hs[i], ls[i] * cfg.Ts, b[i] * c, c, cfg)
             for i in range(n_paths)]
    return ChannelRealization.from_paths(paths, c, b_max * c, cfg, seed=seed)


def dirichlet_mag(x, N):
    """|sum_{n=0}^{N-1} exp(2j*pi*n*x/N)| / N, the periodic-sinc profile."""
    x = np.asarray(x, dtype=float)
    num = np.sin(np.pi * x)
    den = N * np.sin(np.pi * x / N)
    out = np.ones_like(x)
    nz = den != 0
    out[nz] = np.abs(num[nz] / den[nz])
    return out


def scan_tap_support(realization, cfg, l_lo, l_hi):
    """Delay taps with any nonzero response, found by direct evaluation."""
    M, N = cfg.M, cfg.N
    u = (np.arange(M)[:, None] + np.arange(N)[None, :] * M).astype(float)
    support = []
    for l in range(l_lo, l_hi + 1):
        for p in realization.paths:
            vals = pulse_eval((l - p.l + p.b * u) * cfg.Ts, cfg)
            if np.any(vals != 0.0):
                support.append(l)
                break
    return support


def max_isi_cross_term(realization, cfg, m_data_lo, m_data_hi):
    """Largest |pulse value| coupling samples of different within-symbol
    indices, scanning all receive samples against all data symbol rows.

    Zero means the zero-padding guard removed every inter-sample
    interference term.
    """
    M, N = cfg.M, cfg.N
    worst = 0.0
    nd = np.arange(N)
    ndp = np.arange(N)
    for p in realization.paths:
        for m in range(M):
            for mp in range(m_data_lo, m_data_hi + 1):
                # pulse argument for receive (m, nd) against transmit (mp, ndp)
                arg = ((m + nd[:, None] * M) - (mp + ndp[None, :] * M)
                       - p.l + p.b * (m + nd[:, None] * M))
                vals = np.abs(pulse_eval(arg * cfg.Ts, cfg))
                vals[nd[:, None] == ndp[None, :]] = 0.0
                worst = max(worst, float(vals.max()))
    return worst
