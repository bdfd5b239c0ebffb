"""Delay-Doppler domain channel matrices and the modeling-error metric.

The NM x NM delay-Doppler channel matrix is never materialized.  It is
stored banded as a kernel array G[l, m, k] (delay tap, delay bin,
Doppler offset): the matrix entry at row m*N+n, column
N*((m-l) mod M) + ((n-k) mod N) equals G_l(m, k), times a unit-modulus
cyclic-prefix phase exp(-2j*pi*(n-k)/N) on rows that wrap (m < l).
Each kernel value therefore occupies exactly N matrix entries, which is
what makes the Frobenius-norm identity in :func:`nmse` possible.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .channel import ChannelRealization
from .core import RCP, ZP, DdFrame, FrameConfig, InfeasibleConfigError
from .timesim import build_tap_grid

BASELINE_SYNC_MODES = ("keep", "drop")


@dataclass(frozen=True)
class DdChannelMatrix:
    """Banded delay-Doppler channel matrix.

    G         kernel array of shape (l_max_eff+1, M, N)
    mode      RCP or ZP framing
    cfg       frame configuration the kernel was built for
    zp_bounds (m_min, m_max) support bounds, present in ZP mode
    """

    G: np.ndarray
    mode: str
    cfg: FrameConfig
    zp_bounds: tuple | None = None

    def __post_init__(self):
        arr = np.asarray(self.G, dtype=np.complex128)
        arr = arr.copy() if arr.flags.writeable else arr
        arr.flags.writeable = False
        object.__setattr__(self, "G", arr)

    @property
    def l_max_eff(self) -> int:
        return self.G.shape[0] - 1


def phase_phi(m_prime: int, n_prime: int, cfg: FrameConfig) -> complex:
    """Unit-modulus phase picked up by taps wrapping through the prefix.

    1 for 0 <= m' <= M-1 and exp(-2j*pi*n'/N) for -M+1 <= m' < 0.
    """
    if not -cfg.M + 1 <= m_prime <= cfg.M - 1:
        raise ValueError(f"m' must lie in [{-cfg.M + 1}, {cfg.M - 1}], got {m_prime}")
    if m_prime >= 0:
        return 1.0 + 0.0j
    return complex(np.exp(-2j * np.pi * n_prime / cfg.N))


def build_G(realization: ChannelRealization, cfg: FrameConfig, dse: bool = True,
            baseline_sync: str = "keep") -> DdChannelMatrix:
    """Assemble the delay-Doppler kernel G_l(m, k).

    G_l(m, k) = sum_i h_i * exp(2j*pi*k_i*m/(N*M)) * (1/N)
    * sum_ndot exp(-2j*pi*ndot*(k-k_i)/N) * a((l - l_i + b_i*u)*Ts),
    u = m + ndot*M.  The inner sum over ndot is one length-N transform
    of the modulated pulse-sample sequence, evaluated here as a batched
    FFT of the time-domain tap grid.

    ``dse=False`` builds the squint-ignorant kernel: the Doppler scaling
    is zeroed inside the pulse argument only, keeping the Doppler phase,
    the synchronization offset and the tap loop bounds identical so both
    kernels share support.  ``baseline_sync="drop"`` additionally
    re-synchronizes that kernel as a squint-unaware receiver would,
    shifting delays left by the drift allowance floor(b_max*(N*M-1)).
    """
    if baseline_sync not in BASELINE_SYNC_MODES:
        raise ValueError(f"baseline_sync must be one of {BASELINE_SYNC_MODES}")
    shift = 0.0
    if not dse and baseline_sync == "drop":
        shift = float(math.floor(realization.b_max * (cfg.N * cfg.M - 1)))
    g = build_tap_grid(realization, cfg, dse=dse, delay_shift=shift)
    G = np.fft.fft(g, axis=2) / cfg.N
    bounds = zp_range(realization, cfg) if cfg.prefix_mode == ZP else None
    return DdChannelMatrix(G=G, mode=cfg.prefix_mode, cfg=cfg, zp_bounds=bounds)


def apply_rcp(H: DdChannelMatrix, frame: DdFrame) -> DdFrame:
    """Banded product Y = H x for cyclic-prefix framing.

    Y[m, n] = sum_{l, k} X[(m-l) mod M, (n-k) mod N]
    * phi[m-l, n-k] * G_l(m, k).
    """
    if H.mode != RCP:
        raise ValueError(f"matrix is in {H.mode} mode, expected {RCP}")
    if frame.data.shape != (H.cfg.M, H.cfg.N):
        raise ValueError(
            f"frame shape {frame.data.shape} does not match matrix ({H.cfg.M}, {H.cfg.N})"
        )
    return DdFrame(_accel.apply_rcp_kernel(H.G, frame.data))


def zp_range(realization: ChannelRealization, cfg: FrameConfig) -> tuple[int, int]:
    """Delay-bin range [m_min, m_max] that data may occupy under ZP framing.

    Outside this range the frame must be zero so that no transmitted
    sample of one within-symbol index interferes with another: the guard
    absorbs the pulse tails (Q) and the worst-case delay drift.  With
    the synchronization convention m_min clamps to 0, so the zero pad
    occupies only the tail of the frame.
    """
    b = realization.b_max
    m_min = int(math.ceil(cfg.Q - realization.l_min - 1
                          + b * ((cfg.N - 1) * cfg.M - 1)))
    m_min = max(0, m_min)
    m_max = int(math.floor(cfg.M - cfg.Q - realization.l_max
                           - b * (cfg.N - 1) * cfg.M))
    if m_max < m_min:
        raise InfeasibleConfigError(
            f"frame too short for zero padding: m_min={m_min}, m_max={m_max}"
        )
    return m_min, m_max


def apply_zp(H: DdChannelMatrix, frame: DdFrame) -> DdFrame:
    """Banded product Y = H x for zero-padded framing.

    Y[m, n] = sum_{l, k} X[m-l, (n-k) mod N] * G_l(m, k): linear (not
    circular) in delay and free of the prefix phase.  The frame must be
    zero outside the matrix's ZP support bounds.
    """
    if H.mode != ZP:
        raise ValueError(f"matrix is in {H.mode} mode, expected {ZP}")
    if frame.data.shape != (H.cfg.M, H.cfg.N):
        raise ValueError(
            f"frame shape {frame.data.shape} does not match matrix ({H.cfg.M}, {H.cfg.N})"
        )
    m_min, m_max = H.zp_bounds
    occupied = np.nonzero(np.any(frame.data != 0, axis=1))[0]
    if occupied.size and (occupied[0] < m_min or occupied[-1] > m_max):
        raise ValueError(
            f"frame violates the ZP support [{m_min}, {m_max}]: "
            f"data found at delay bins {occupied[0]}..{occupied[-1]}"
        )
    return DdFrame(_accel.apply_zp_kernel(H.G, frame.data))


def nmse(H: DdChannelMatrix, H_hat: DdChannelMatrix) -> float:
    """Squared-Frobenius modeling error ||H - H_hat||^2 / ||H||^2.

    Computed on the banded kernels: every kernel value fills exactly N
    matrix entries through unit-modulus phases shared by both matrices,
    so ||H - H_hat||_F^2 = N * sum |G - G_hat|^2 without ever forming
    the dense matrices.
    """
    if H.G.shape != H_hat.G.shape:
        raise ValueError(f"kernel shapes differ: {H.G.shape} vs {H_hat.G.shape}")
    if H.mode != H_hat.mode:
        raise ValueError(f"framing modes differ: {H.mode} vs {H_hat.mode}")
    N = H.cfg.N
    den = N * float(np.real(np.vdot(H.G, H.G)))
    if den == 0.0:
        raise ValueError("reference matrix has zero norm")
    diff = H.G - H_hat.G
    num = N * float(np.real(np.vdot(diff, diff)))
    return num / den


def dense_matrix(H: DdChannelMatrix) -> np.ndarray:
    """Materialize the full NM x NM matrix (small frames only).

    Diagnostic counterpart of the banded form, used to cross-check the
    matrix-vector products and the :func:`nmse` identity.  Refuses
    frames beyond NM = 4096 where the dense form has no business
    existing.
    """
    M, N = H.cfg.M, H.cfg.N
    if M * N > 4096:
        raise ValueError(f"dense matrix refused for NM = {M * N} > 4096")
    G = H.G
    out = np.zeros((M * N, M * N), dtype=np.complex128)
    wrap = np.exp(-2j * np.pi * np.arange(N) / N)
    for l in range(G.shape[0]):
        for m in range(M):
            mp = (m - l) % M
            for k in range(N):
                for n in range(N):
                    npr = (n - k) % N
                    phi = wrap[npr] if m < l else 1.0
                    out[m * N + n, mp * N + npr] += phi * G[l, m, k]
    return out


def dump_kernel_csv(H: DdChannelMatrix, path) -> None:
    """Write the nonzero kernel values as CSV rows l, m, k, re, im, mag_db."""
    G = H.G
    peak = float(np.max(np.abs(G)))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["l", "m", "k", "re", "im", "mag_db"])
        for l, m, k in zip(*np.nonzero(G)):
            val = G[l, m, k]
            mag_db = 20.0 * math.log10(abs(val) / peak)
            writer.writerow([l, m, k, f"{val.real:.12e}", f"{val.imag:.12e}",
                             f"{mag_db:.6f}"])
