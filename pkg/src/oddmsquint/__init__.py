"""Wideband delay-Doppler multicarrier channels under Doppler squint.

Exact input-output characterization of ODDM-style frames over multipath
channels whose Doppler arises from time scaling rather than a pure
frequency shift, plus Monte Carlo tooling to quantify the error of
squint-ignorant channel models.
"""

from ._accel import active_backend
from .channel import (
    KMH,
    KNOT,
    ChannelRealization,
    Path,
    derive_path,
    freq_response,
    gen_tdlc,
    gen_uwa,
    load_channel,
    save_channel,
    sync_offset_taps,
    tap_range,
)
from .core import (
    RCP,
    ZP,
    DdFrame,
    FrameConfig,
    InfeasibleConfigError,
    TimeSamples,
    devectorize,
    pulse_eval,
    raised_cosine,
    sample_instant,
    vectorize,
)
from .ddmatrix import (
    DdChannelMatrix,
    apply_rcp,
    apply_zp,
    build_G,
    dense_matrix,
    dump_kernel_csv,
    nmse,
    phase_phi,
    zp_range,
)
from .modem import dd_to_time, synthesize, time_to_dd
from .timesim import TapResponse, add_noise, propagate_exact, propagate_taps, tap_response

__version__ = "0.1.0"

__all__ = [
    "active_backend",
    "KMH", "KNOT",
    "ChannelRealization", "Path", "derive_path", "freq_response",
    "gen_tdlc", "gen_uwa", "load_channel", "save_channel",
    "sync_offset_taps", "tap_range",
    "RCP", "ZP", "DdFrame", "FrameConfig", "InfeasibleConfigError",
    "TimeSamples", "devectorize", "pulse_eval", "raised_cosine",
    "sample_instant", "vectorize",
    "DdChannelMatrix", "apply_rcp", "apply_zp", "build_G", "dense_matrix",
    "dump_kernel_csv", "nmse", "phase_phi", "zp_range",
    "dd_to_time", "synthesize", "time_to_dd",
    "TapResponse", "add_noise", "propagate_exact", "propagate_taps",
    "tap_response",
]
