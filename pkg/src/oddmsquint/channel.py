"""Multipath linear time-variant channels with Doppler scaling.

A path is described by its complex baseband gain, its propagation delay
and the speed at which its length shrinks.  The wideband (squint) model
keeps the full time scaling of the received waveform, so the normalized
delay of a path drifts across the frame instead of staying put.  This
module holds the per-path bookkeeping, the integer tap bounds of the
equivalent sampled channel, the statistical generators for the two
simulation scenarios, and a diagnostic time-variant frequency response.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .core import FrameConfig, InfeasibleConfigError

KNOT = 0.514444  # m/s per knot
KMH = 1.0 / 3.6  # m/s per km/h

# 3GPP TR 38.901 TDL-C delay-power profile.  Delays are in units of the
# desired rms delay spread; powers are per-tap averages in dB.
TDLC_NORMALIZED_DELAYS = np.array([
    0.0000, 0.2099, 0.2219, 0.2329, 0.2176, 0.6366, 0.6448, 0.6560,
    0.6584, 0.7935, 0.8213, 0.9336, 1.2285, 1.3083, 2.1704, 2.7105,
    4.2589, 4.6003, 5.4902, 5.6077, 6.3065, 6.6374, 7.0427, 8.6523,
])
TDLC_POWERS_DB = np.array([
    -4.4, -1.2, -3.5, -5.2, -2.5, 0.0, -2.2, -3.9, -7.4, -7.1,
    -10.7, -11.1, -5.1, -6.8, -8.7, -13.2, -13.9, -13.9, -15.8,
    -17.1, -16.0, -15.7, -21.6, -22.8,
])

UWA_PATH_COUNT = 10
UWA_MEAN_INTERARRIVAL_S = 1e-3
UWA_DECAY_DB = 20.0          # total average-power decay ...
UWA_DECAY_SPAN_S = 10e-3     # ... over this much excess delay


def stream(*key: int) -> np.random.Generator:
    """Counter-based (Philox) random stream keyed by a tuple of integers.

    Streams derived from distinct keys are independent, so Monte Carlo
    realizations can be drawn in any order (or in parallel) and still
    reproduce bit-identically.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(list(key))))


@dataclass(frozen=True)
class Path:
    """One propagation path plus its derived normalized quantities.

    h    complex baseband gain (carrier phase already folded in)
    tau  propagation delay in seconds
    v    closing speed in m/s, positive when the path length shrinks
    b    Doppler scaling factor v/c
    nu   Doppler shift at the carrier, b*f_c, in Hz
    l    normalized delay tau/Ts (need not be an integer)
    k    normalized Doppler nu*N*M*Ts (need not be an integer)
    """

    h: complex
    tau: float
    v: float
    b: float
    nu: float
    l: float
    k: float


def derive_path(h: complex, tau: float, v: float, c: float, cfg: FrameConfig) -> Path:
    """Build a :class:`Path` from physical parameters over wave speed ``c``."""
    if c <= 0:
        raise ValueError(f"wave speed must be positive, got {c}")
    if abs(v) >= c:
        raise ValueError(f"|v| must be below the wave speed, got v={v}, c={c}")
    b = v / c
    nu = b * cfg.f_c
    return Path(
        h=complex(h),
        tau=float(tau),
        v=float(v),
        b=b,
        nu=nu,
        l=float(tau) * cfg.f_s,
        k=nu * cfg.N * cfg.M * cfg.Ts,
    )


def sync_offset_taps(v_max: float, c: float, cfg: FrameConfig) -> int:
    """Synchronization offset Q + floor(b_max*(N*M-1)) in delay taps.

    Aligning the first arrival to this tap makes the equivalent sampled
    channel start at tap 0: the pulse pre-cursor (Q taps) plus the worst
    delay drift over the frame are both absorbed.
    """
    b_max = v_max / c
    return cfg.Q + int(math.floor(b_max * (cfg.N * cfg.M - 1)))


@dataclass(frozen=True)
class ChannelRealization:
    """A set of paths plus frame-level bounds used by the tap analysis.

    l_min/l_max are integer bounds with l_min <= l_i <= l_max for every
    path; after synchronization l_min equals the sync offset.  n_redraws
    counts rejected draws (equivalent channel too long) in generators.
    """

    paths: tuple
    c: float
    v_max: float
    b_max: float
    l_min: int
    l_max: int
    sync_offset: int
    seed: int | None = None
    n_redraws: int = 0

    @classmethod
    def from_paths(cls, paths, c: float, v_max: float, cfg: FrameConfig,
                   seed: int | None = None, n_redraws: int = 0) -> "ChannelRealization":
        paths = tuple(paths)
        if not paths:
            raise ValueError("a channel realization needs at least one path")
        if v_max < max(abs(p.v) for p in paths):
            raise ValueError("v_max smaller than an actual path speed")
        sync = sync_offset_taps(v_max, c, cfg)
        l_min = min(sync, int(math.floor(min(p.l for p in paths))))
        l_max = int(math.ceil(max(p.l for p in paths)))
        real = cls(paths=paths, c=float(c), v_max=float(v_max), b_max=v_max / c,
                   l_min=l_min, l_max=l_max, sync_offset=sync,
                   seed=seed, n_redraws=n_redraws)
        tap_range(real, cfg)  # rejects realizations whose taps do not fit M
        return real

    @property
    def P(self) -> int:
        return len(self.paths)

    def gains(self) -> np.ndarray:
        return np.array([p.h for p in self.paths])

    def delays_taps(self) -> np.ndarray:
        return np.array([p.l for p in self.paths])

    def dopplers_bins(self) -> np.ndarray:
        return np.array([p.k for p in self.paths])

    def scalings(self) -> np.ndarray:
        return np.array([p.b for p in self.paths])


def tap_range(realization: ChannelRealization, cfg: FrameConfig) -> tuple[int, int]:
    """Integer tap bounds of the equivalent sampled channel.

    The pulse reaches Q taps either side of each (drifting) path delay,
    and the delay drift over one frame adds up to b_max*(N*M-1) taps.
    With the synchronization convention the lower bound is 0.
    """
    spread = realization.b_max * (cfg.N * cfg.M - 1)
    l_lo = int(math.ceil(realization.l_min - cfg.Q - spread))
    l_hi = int(math.floor(realization.l_max + cfg.Q + spread))
    if l_hi >= cfg.M:
        raise InfeasibleConfigError(
            f"max delay tap {l_hi} must be below M={cfg.M}"
        )
    return l_lo, l_hi


def _cosine_speeds(rng: np.random.Generator, v_max: float, n: int) -> np.ndarray:
    theta = rng.uniform(-np.pi, np.pi, n)
    return v_max * np.cos(theta)


def gen_tdlc(delay_spread: float, v_max: float, seed: int, cfg: FrameConfig,
             c: float = 3.0e8) -> ChannelRealization:
    """Random TDL-C realization scaled to ``delay_spread`` seconds (rms).

    Gains are circularly-symmetric complex Gaussian with the profile's
    per-tap average powers, then normalized to unit total power.  Each
    path moves at v_max*cos(theta) with theta uniform on [-pi, pi].
    Delays sit at their exact fractional positions, offset so the first
    tap lands on the synchronization offset.
    """
    if delay_spread <= 0:
        raise ValueError(f"delay spread must be positive, got {delay_spread}")
    rng = stream(seed)
    n_taps = len(TDLC_NORMALIZED_DELAYS)
    powers = 10.0 ** (TDLC_POWERS_DB / 10.0)
    h = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps)) * np.sqrt(powers / 2.0)
    h = h / np.sqrt(np.sum(np.abs(h) ** 2))
    v = _cosine_speeds(rng, v_max, n_taps)
    sync_s = sync_offset_taps(v_max, c, cfg) * cfg.Ts
    taus = sync_s + TDLC_NORMALIZED_DELAYS * delay_spread
    paths = [derive_path(h[i], taus[i], v[i], c, cfg) for i in range(n_taps)]
    return ChannelRealization.from_paths(paths, c, v_max, cfg, seed=seed)


def gen_uwa(v_max: float, seed: int, cfg: FrameConfig,
            c: float = 1500.0) -> ChannelRealization:
    """Random underwater-acoustic realization (10 Rayleigh paths).

    Path arrivals follow a Poisson clock past the synchronization
    instant: ten inter-arrival gaps, i.i.d. exponential with mean 1 ms,
    giving a 10 ms mean delay spread.  Average path power decays by
    20 dB per 10 ms of excess delay; amplitudes are Rayleigh with those
    averages and uniform phase, normalized per realization.  Draws whose
    equivalent channel does not fit the frame are rejected and redrawn
    (counted in ``n_redraws``).
    """
    rng = stream(seed)
    sync = sync_offset_taps(v_max, c, cfg)
    sync_s = sync * cfg.Ts
    n_redraws = 0
    while True:
        gaps = rng.exponential(UWA_MEAN_INTERARRIVAL_S, UWA_PATH_COUNT)
        excess = np.cumsum(gaps)
        powers = 10.0 ** (-(UWA_DECAY_DB / 10.0) * excess / UWA_DECAY_SPAN_S)
        amp = rng.rayleigh(np.sqrt(powers / 2.0))
        phase = rng.uniform(0.0, 2.0 * np.pi, UWA_PATH_COUNT)
        h = amp * np.exp(1j * phase)
        h = h / np.sqrt(np.sum(np.abs(h) ** 2))
        v = _cosine_speeds(rng, v_max, UWA_PATH_COUNT)
        taus = sync_s + excess
        paths = [derive_path(h[i], taus[i], v[i], c, cfg) for i in range(UWA_PATH_COUNT)]
        try:
            return ChannelRealization.from_paths(
                paths, c, v_max, cfg, seed=seed, n_redraws=n_redraws
            )
        except InfeasibleConfigError:
            n_redraws += 1


def freq_response(realization: ChannelRealization, t, f):
    """Baseband time-variant frequency response H(t, f).

    Sum over paths of h * exp(-2j*pi*f*tau) * exp(2j*pi*nu*t)
    * exp(2j*pi*b*f*t).  The last factor couples time and frequency:
    delay drifts with time and Doppler grows with frequency.  Diagnostic
    only; broadcasts over array t and f.
    """
    t = np.asarray(t, dtype=np.float64)
    f = np.asarray(f, dtype=np.float64)
    out = np.zeros(np.broadcast(t, f).shape, dtype=np.complex128)
    for p in realization.paths:
        out += p.h * np.exp(2j * np.pi * (-f * p.tau + p.nu * t + p.b * f * t))
    if out.ndim == 0:
        return complex(out)
    return out


# ---------------------------------------------------------------------------
# JSON replay
# ---------------------------------------------------------------------------


def realization_to_dict(realization: ChannelRealization) -> dict:
    return {
        "c": realization.c,
        "v_max": realization.v_max,
        "seed": realization.seed,
        "paths": [
            {"h_re": p.h.real, "h_im": p.h.imag, "tau_s": p.tau, "v_mps": p.v}
            for p in realization.paths
        ],
    }


def realization_from_dict(doc: dict, cfg: FrameConfig) -> ChannelRealization:
    paths = [
        derive_path(complex(d["h_re"], d["h_im"]), d["tau_s"], d["v_mps"], doc["c"], cfg)
        for d in doc["paths"]
    ]
    return ChannelRealization.from_paths(paths, doc["c"], doc["v_max"], cfg,
                                         seed=doc.get("seed"))


def save_channel(realization: ChannelRealization, path) -> None:
    with open(path, "w") as fh:
        json.dump(realization_to_dict(realization), fh, indent=2)
        fh.write("\n")


def load_channel(path, cfg: FrameConfig) -> ChannelRealization:
    with open(path) as fh:
        return realization_from_dict(json.load(fh), cfg)
