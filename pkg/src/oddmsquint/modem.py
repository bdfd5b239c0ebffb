"""Transmitter and receiver transforms plus continuous waveform synthesis.

The delay-Doppler grid maps to time samples by a normalized N-point IFFT
per symbol row; the receiver undoes it with the matching FFT.  The
continuous baseband waveform interleaves the sample grid with the
shaping pulse: symbol rows are staggered by one sample interval while
samples within a row sit a full symbol apart.
"""

from __future__ import annotations

import numpy as np

from .core import DdFrame, FrameConfig, TimeSamples, raised_cosine


def dd_to_time(frame: DdFrame, cfg: FrameConfig) -> TimeSamples:
    """Modulate X[m, n] to time samples x[m, ndot] and attach the prefix.

    x[m, ndot] = (1/sqrt(N)) * sum_n X[m, n] * exp(2j*pi*n*ndot/N) for
    ndot in [0, N); the prefix column copies the last body column (RCP)
    or stays zero (ZP).
    """
    if frame.data.shape != (cfg.M, cfg.N):
        raise ValueError(
            f"frame shape {frame.data.shape} does not match config ({cfg.M}, {cfg.N})"
        )
    body = np.fft.ifft(frame.data, axis=1, norm="ortho")
    return TimeSamples.from_body(body, cfg.prefix_mode)


def time_to_dd(samples: TimeSamples, cfg: FrameConfig) -> DdFrame:
    """Demodulate the body block back to the delay-Doppler grid.

    Y[m, n] = (1/sqrt(N)) * sum_ndot y[m, ndot] * exp(-2j*pi*n*ndot/N);
    the prefix column is ignored.
    """
    if samples.samples.shape != (cfg.M, cfg.N + 1):
        raise ValueError(
            f"samples shape {samples.samples.shape} does not match config "
            f"({cfg.M}, {cfg.N + 1})"
        )
    return DdFrame(np.fft.fft(samples.body, axis=1, norm="ortho"))


def synthesize(t, samples: TimeSamples, cfg: FrameConfig):
    """Continuous baseband waveform s(t) at arbitrary instants (seconds).

    s(t) = sum_{m, ndot} x[m, ndot] * a(t - m*Ts - ndot*T) evaluated
    exactly by visiting only the <= 2Q+1 grid samples whose pulse covers
    t.  Accepts scalars or arrays; never materializes an oversampled
    waveform, so off-grid instants cost the same as on-grid ones.
    """
    M, N, Q = cfg.M, samples.N, cfg.Q
    t_arr = np.atleast_1d(np.asarray(t, dtype=np.float64))
    u_float = t_arr * cfg.f_s
    base = np.floor(u_float).astype(np.int64)
    # Candidate flattened sample indices u' = m' + ndot'*M around t.
    cand = base[:, None] + np.arange(-Q, Q + 1)[None, :]
    weights = raised_cosine(u_float[:, None] - cand, cfg.beta, Q)
    m_idx = np.mod(cand, M)
    nd_idx = (cand - m_idx) // M
    valid = (nd_idx >= -1) & (nd_idx < N)
    vals = np.zeros(cand.shape, dtype=np.complex128)
    vals[valid] = samples.samples[m_idx[valid], nd_idx[valid] + 1]
    out = np.sum(weights * vals, axis=1)
    if np.ndim(t) == 0:
        return complex(out[0])
    return out.reshape(np.shape(t))
