"""Frame configuration, delay-Doppler grid containers and the shaping pulse.

The delay-Doppler grid is M delay bins by N Doppler bins.  Time-domain
frames carry one extra sample column (the prefix, at within-symbol index
-1) so that M*(N+1) samples describe one transmitted frame.  Everything
here is immutable after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RCP = "RCP"  # reduced cyclic prefix: prefix column copies the last column
ZP = "ZP"    # zero padding: prefix column is all zero

PREFIX_MODES = (RCP, ZP)


class InfeasibleConfigError(ValueError):
    """A model assumption does not hold for the requested configuration.

    Raised when the equivalent channel does not fit the frame (maximum
    delay tap >= M), when a frame is too short to host a zero-padding
    guard, or when a channel is not synchronized well enough for the
    tap decomposition.
    """


@dataclass(frozen=True)
class FrameConfig:
    """Static system parameters of one delay-Doppler frame.

    M           number of multicarrier symbols (= delay bins)
    N           number of subcarriers per symbol (= Doppler bins)
    f_s         sample rate in Hz; the delay resolution is 1/f_s
    f_c         carrier frequency in Hz
    Q           pulse half-length in samples; the pulse vanishes for
                |t| >= Q/f_s
    beta        roll-off factor of the raised-cosine pulse, in [0, 1]
    prefix_mode RCP or ZP
    """

    M: int
    N: int
    f_s: float
    f_c: float
    Q: int = 8
    beta: float = 0.1
    prefix_mode: str = RCP

    def __post_init__(self):
        if self.M < 2 or self.N < 2:
            raise ValueError(f"need M >= 2 and N >= 2, got M={self.M}, N={self.N}")
        if self.Q < 1:
            raise ValueError(f"need Q >= 1, got Q={self.Q}")
        if self.f_s <= 0 or self.f_c <= 0:
            raise ValueError("sample rate and carrier frequency must be positive")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"roll-off factor must lie in [0, 1], got {self.beta}")
        # The short pulse has to be much shorter than one multicarrier symbol.
        if 2 * self.Q >= self.M / 4:
            raise ValueError(
                f"pulse too long for the frame: need 2*Q < M/4, got Q={self.Q}, M={self.M}"
            )
        if self.prefix_mode not in PREFIX_MODES:
            raise ValueError(f"prefix_mode must be one of {PREFIX_MODES}")

    @property
    def Ts(self) -> float:
        """Sample interval / delay resolution in seconds."""
        return 1.0 / self.f_s

    @property
    def T(self) -> float:
        """Within-symbol sample interval M*Ts in seconds."""
        return self.M * self.Ts

    @property
    def grid_size(self) -> int:
        return self.M * self.N

    @property
    def doppler_resolution(self) -> float:
        """Doppler bin width 1/(N*M*Ts) in Hz."""
        return 1.0 / (self.N * self.M * self.Ts)

    @property
    def frame_duration(self) -> float:
        """Approximate frame length N*M*Ts in seconds."""
        return self.N * self.M * self.Ts


# Below this |1 - (2*beta*x)^2| the factored form of the pulse takes over;
# it is algebraically identical but free of the 0/0 cancellation, so the
# removable singularity at |x| = 1/(2*beta) evaluates to its analytic limit
# (pi/4)*sinc(1/(2*beta)) with full precision and no special-cased point.
_STABLE_DEN = 0.0625


def raised_cosine(x, beta: float, q: int):
    """Raised-cosine pulse in symbol units, hard-truncated to |x| < q.

    x is time over the symbol interval.  Normalized to value 1 at x=0,
    with zero crossings at every other integer, and exactly zero for
    |x| >= q.  Near |x| = 1/(2*beta) the cos/(1-(2*beta*x)^2) factor is
    evaluated as (pi/2)*sinc(beta*|x| - 1/2)/(1 + 2*beta*|x|), the same
    function written without the removable singularity.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.zeros_like(x)
    inside = np.abs(x) < q
    xi = x[inside]
    if beta == 0.0:
        out[inside] = np.sinc(xi)
    else:
        u = 2.0 * beta * xi
        den = 1.0 - u * u
        val = np.empty_like(xi)
        near = np.abs(den) < _STABLE_DEN
        reg = ~near
        val[reg] = np.sinc(xi[reg]) * np.cos(np.pi * beta * xi[reg]) / den[reg]
        ax = np.abs(xi[near])
        val[near] = (np.sinc(xi[near]) * (np.pi / 2.0)
                     * np.sinc(beta * ax - 0.5) / (1.0 + 2.0 * beta * ax))
        out[inside] = val
    return out[0] if scalar else out


def pulse_eval(t, cfg: FrameConfig):
    """Evaluate the transmit/receive shaping pulse a(t) at time t (seconds).

    Total for any finite t; accepts scalars or arrays.
    """
    return raised_cosine(np.asarray(t, dtype=np.float64) * cfg.f_s, cfg.beta, cfg.Q)


def _frozen_complex(a, shape_hint: str) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"{shape_hint} must be a 2-D array, got shape {arr.shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DdFrame:
    """M x N grid of delay-Doppler symbols X[m, n]."""

    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "data", _frozen_complex(self.data, "DdFrame.data"))

    @property
    def M(self) -> int:
        return self.data.shape[0]

    @property
    def N(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, cfg: FrameConfig) -> "DdFrame":
        return cls(np.zeros((cfg.M, cfg.N), dtype=np.complex128))

    @classmethod
    def impulse(cls, cfg: FrameConfig, m: int = 0, n: int = 0) -> "DdFrame":
        data = np.zeros((cfg.M, cfg.N), dtype=np.complex128)
        data[m, n] = 1.0
        return cls(data)


def vectorize(frame: DdFrame) -> np.ndarray:
    """Flatten X[m, n] into a length N*M vector with element m*N+n = X[m, n]."""
    return frame.data.reshape(-1).copy()


def devectorize(vec: np.ndarray, M: int, N: int) -> DdFrame:
    """Exact inverse of :func:`vectorize`."""
    vec = np.asarray(vec)
    if vec.shape != (M * N,):
        raise ValueError(f"expected a vector of length {M * N}, got shape {vec.shape}")
    return DdFrame(vec.reshape(M, N))


@dataclass(frozen=True)
class TimeSamples:
    """M x (N+1) complex sample grid x[m, ndot] with the prefix at ndot=-1.

    Column j of ``samples`` holds within-symbol index ndot = j - 1, so the
    prefix column sits at j = 0 and the body occupies j = 1..N.  The sample
    at (m, ndot) corresponds to the instant (m + ndot*M)*Ts.
    """

    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "samples", _frozen_complex(self.samples, "TimeSamples.samples")
        )
        if self.samples.shape[1] < 2:
            raise ValueError("TimeSamples needs a prefix column plus at least one body column")

    @property
    def M(self) -> int:
        return self.samples.shape[0]

    @property
    def N(self) -> int:
        return self.samples.shape[1] - 1

    @property
    def body(self) -> np.ndarray:
        """The ndot in [0, N) block (read-only view)."""
        return self.samples[:, 1:]

    @property
    def prefix(self) -> np.ndarray:
        """The ndot = -1 column (read-only view)."""
        return self.samples[:, 0]

    @classmethod
    def from_body(cls, body: np.ndarray, prefix_mode: str) -> "TimeSamples":
        """Attach the prefix column dictated by the framing mode."""
        body = np.asarray(body, dtype=np.complex128)
        if body.ndim != 2:
            raise ValueError("body must be a 2-D array")
        full = np.empty((body.shape[0], body.shape[1] + 1), dtype=np.complex128)
        full[:, 1:] = body
        if prefix_mode == RCP:
            full[:, 0] = body[:, -1]
        elif prefix_mode == ZP:
            full[:, 0] = 0.0
        else:
            raise ValueError(f"prefix_mode must be one of {PREFIX_MODES}")
        return cls(full)

    def prefix_consistent(self, prefix_mode: str) -> bool:
        if prefix_mode == RCP:
            return bool(np.array_equal(self.prefix, self.body[:, -1]))
        if prefix_mode == ZP:
            return bool(np.all(self.prefix == 0))
        raise ValueError(f"prefix_mode must be one of {PREFIX_MODES}")


def sample_instant(m, ndot, cfg: FrameConfig):
    """Time of sample (m, ndot) in seconds: (m + ndot*M)*Ts."""
    return (np.asarray(m) + np.asarray(ndot) * cfg.M) * cfg.Ts
