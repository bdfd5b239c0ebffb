"""Ground-truth propagation through the wideband channel.

:func:`propagate_exact` evaluates the received waveform directly from
its continuous-time definition, path by path and sample by sample.  It
is deliberately free of any tap or transform shortcut so it can stand as
the reference that every optimized route is checked against.
:func:`tap_response`/:func:`propagate_taps` implement the equivalent
time-variant tap form of the same channel, which the delay-Doppler
characterization builds on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel, modem
from .channel import ChannelRealization, tap_range
from .core import FrameConfig, TimeSamples


def propagate_exact(samples: TimeSamples, realization: ChannelRealization,
                    cfg: FrameConfig) -> TimeSamples:
    """Receive samples by direct evaluation of the continuous-time model.

    y[m, ndot] = sum_i h_i * exp(2j*pi*nu_i*t) * s((1+b_i)*t - tau_i)
    at t = (m + ndot*M)*Ts, with s from :func:`modem.synthesize`.  The
    time scaling (1+b_i) is kept in full: delay drifts across the frame
    instead of being frozen at tau_i.  All N+1 sample columns (prefix
    included) are produced.
    """
    M, N = cfg.M, cfg.N
    u = (np.arange(M, dtype=np.float64)[:, None]
         + np.arange(-1, N, dtype=np.float64)[None, :] * M)
    t = u.ravel() * cfg.Ts
    y = np.zeros(t.shape, dtype=np.complex128)
    for p in realization.paths:
        y += p.h * np.exp(2j * np.pi * p.nu * t) * modem.synthesize(
            (1.0 + p.b) * t - p.tau, samples, cfg
        )
    return TimeSamples(y.reshape(M, N + 1))


@dataclass(frozen=True)
class TapResponse:
    """Time-variant taps g[l, m, ndot] of the equivalent sampled channel.

    g has shape (l_max_eff+1, M, N); entry (l, m, ndot) weighs the
    transmitted sample l delay taps before receive instant m + ndot*M.
    """

    g: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.g, dtype=np.complex128)
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "g", arr)

    @property
    def l_max_eff(self) -> int:
        return self.g.shape[0] - 1


def _effective_paths(realization: ChannelRealization, dse: bool,
                     delay_shift: float = 0.0):
    ls = realization.delays_taps() - delay_shift
    ks = realization.dopplers_bins()
    bs = realization.scalings() if dse else np.zeros(realization.P)
    hs = realization.gains()
    return ls, ks, bs, hs


def build_tap_grid(realization: ChannelRealization, cfg: FrameConfig,
                   dse: bool = True, delay_shift: float = 0.0) -> np.ndarray:
    """Raw (L, M, N) tap array; L spans taps 0..l_max_eff.

    Taps below delay 0 are outside the model; with the synchronization
    convention they carry no energy.  With ``dse=False`` the Doppler
    scaling is dropped from the pulse argument (frozen delays) while the
    per-sample Doppler phase is kept; ``delay_shift`` moves every path
    delay left by that many taps.
    """
    _, l_hi = tap_range(realization, cfg)
    ls, ks, bs, hs = _effective_paths(realization, dse, delay_shift)
    return _accel.tap_kernel(l_hi + 1, cfg.M, cfg.N, ls, ks, bs, hs,
                             cfg.beta, cfg.Q)


def tap_response(realization: ChannelRealization, cfg: FrameConfig) -> TapResponse:
    """Time-variant impulse response of the full wideband channel.

    g_l(m, ndot) = sum_i h_i * exp(2j*pi*k_i*u/(N*M))
    * a((l - l_i + b_i*u)*Ts) with u = m + ndot*M.  Both the Doppler
    phase and the drifting pulse argument vary over the frame, so the
    per-instant nonzero tap set is itself time-varying.
    """
    return TapResponse(build_tap_grid(realization, cfg, dse=True))


def propagate_taps(samples: TimeSamples, taps: TapResponse,
                   cfg: FrameConfig) -> TimeSamples:
    """Receive samples through the equivalent time-variant taps.

    y[m, ndot] = sum_l x[(m-l) mod M, ndot'] * g_l(m, ndot) where the
    delay wrap into the previous symbol row reads the stored prefix
    column (ndot' = ndot - 1).  Under cyclic-prefix framing this matches
    reading column (ndot-1) mod N; under zero padding the prefix is zero.
    Only the body block is filled; the output prefix column is zero.
    """
    M, N = cfg.M, cfg.N
    if samples.samples.shape != (M, N + 1):
        raise ValueError("samples do not match the frame configuration")
    g = taps.g
    y = np.zeros((M, N), dtype=np.complex128)
    src = samples.samples
    rows = np.arange(M)
    for l in range(g.shape[0]):
        mp = (rows - l) % M
        gathered = np.empty((M, N), dtype=np.complex128)
        if l > 0:
            gathered[:l] = src[mp[:l], 0:N]      # wrapped: ndot-1, prefix at col 0
        gathered[l:] = src[mp[l:], 1:N + 1]
        y += gathered * g[l]
    full = np.zeros((M, N + 1), dtype=np.complex128)
    full[:, 1:] = y
    return TimeSamples(full)


def add_noise(samples: TimeSamples, snr_db: float, seed: int) -> TimeSamples:
    """Add circularly-symmetric white Gaussian noise at the given SNR.

    The noise variance is set from the mean power of the input samples;
    ``snr_db = math.inf`` returns the input unchanged.
    """
    if snr_db == math.inf:
        return samples
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    power = float(np.mean(np.abs(samples.samples) ** 2))
    if power == 0.0:
        raise ValueError("cannot scale noise against an all-zero signal")
    sigma2 = power / 10.0 ** (snr_db / 10.0)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed])))
    shape = samples.samples.shape
    noise = math.sqrt(sigma2 / 2.0) * (
        rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    )
    return TimeSamples(samples.samples + noise)
