"""Geometric wideband mmWave channel with a raised-cosine pulse.

The channel between an ``N_t``-element transmit ULA and an ``N_r``-element
receive ULA is a sum of ``L`` paths.  Each path has a complex gain, a delay,
an angle of arrival (receive side) and an angle of departure (transmit side).
The delay-domain taps are sampled through a raised-cosine pulse and the
frequency-domain channel at subcarrier ``k`` is the K-point DFT of the taps.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigurationError, InvalidDimensionError, NumericalError

# 1/1760 us, the 802.11ad sampling interval.
DEFAULT_SYMBOL_PERIOD = 1.0 / 1760e6


@dataclass(frozen=True)
class ArrayGeometry:
    n_elements: int
    spacing: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise InvalidDimensionError(f"array needs at least one element, got {self.n_elements}")
        if self.spacing != 0.5:
            raise InvalidConfigurationError("only half-wavelength ULAs are supported")


@dataclass(frozen=True)
class PulseShape:
    symbol_period: float = DEFAULT_SYMBOL_PERIOD
    rolloff: float = 0.8

    def __post_init__(self):
        if not self.symbol_period > 0:
            raise InvalidConfigurationError("symbol_period must be positive")
        if not 0.0 <= self.rolloff <= 1.0:
            raise InvalidConfigurationError("rolloff must lie in [0, 1]")


@dataclass(frozen=True)
class ChannelPath:
    gain: complex
    delay: float
    aoa: float
    aod: float


@dataclass(frozen=True)
class ChannelRealization:
    paths: tuple
    tx: ArrayGeometry
    rx: ArrayGeometry
    pulse: PulseShape = field(default_factory=PulseShape)
    n_taps: int = 4
    n_subcarriers: int = 32

    def __post_init__(self):
        object.__setattr__(self, "paths", tuple(self.paths))
        if self.n_taps < 1 or self.n_subcarriers < 1:
            raise InvalidDimensionError("n_taps and n_subcarriers must be >= 1")
        max_delay = (self.n_taps - 1) * self.pulse.symbol_period
        slack = 1e-12 * self.pulse.symbol_period
        for path in self.paths:
            if not -slack <= path.delay <= max_delay + slack:
                raise InvalidConfigurationError(f"path delay {path.delay} outside [0, {max_delay}]")
            for angle in (path.aoa, path.aod):
                if not 0.0 <= angle < np.pi:
                    raise InvalidConfigurationError(f"angle {angle} outside [0, pi)")

    @property
    def n_paths(self) -> int:
        return len(self.paths)

    @property
    def n_tx(self) -> int:
        return self.tx.n_elements

    @property
    def n_rx(self) -> int:
        return self.rx.n_elements


@dataclass(frozen=True)
class FrequencyChannel:
    """Per-subcarrier channel matrices stacked as a ``(K, N_r, N_t)`` array."""

    per_subcarrier: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.per_subcarrier, dtype=complex)
        if arr.ndim != 3:
            raise InvalidDimensionError("expected a (K, N_r, N_t) array")
        object.__setattr__(self, "per_subcarrier", arr)

    @property
    def n_subcarriers(self) -> int:
        return self.per_subcarrier.shape[0]

    @property
    def shape(self) -> tuple:
        return self.per_subcarrier.shape[1:]

    def __getitem__(self, k):
        return self.per_subcarrier[k]

    def __len__(self):
        return self.n_subcarriers


def steering_vector(angle: float, n: int) -> np.ndarray:
    """Unit-norm half-wavelength ULA response, ``exp(j*pi*i*cos(angle)) / sqrt(n)``."""
    if n < 1:
        raise InvalidDimensionError(f"steering vector needs n >= 1, got {n}")
    return np.exp(1j * np.pi * np.arange(n) * np.cos(angle)) / np.sqrt(n)


def raised_cosine(t, pulse: PulseShape):
    """Raised-cosine impulse response evaluated at ``t`` seconds.

    Accepts scalars or arrays.  The points ``|t| = T_s / (2 beta)``, where the
    closed form is 0/0, take the analytic limit ``(pi/4) sinc(1 / (2 beta))``.
    """
    t = np.asarray(t, dtype=float)
    x = t / pulse.symbol_period
    beta = pulse.rolloff
    if beta == 0.0:
        out = np.sinc(x)
        return out.item() if out.ndim == 0 else out
    denom = 1.0 - (2.0 * beta * x) ** 2
    singular = np.abs(denom) < 1e-10
    safe = np.where(singular, 1.0, denom)
    out = np.sinc(x) * np.cos(np.pi * beta * x) / safe
    out = np.where(singular, np.pi / 4.0 * np.sinc(1.0 / (2.0 * beta)), out)
    return out.item() if out.ndim == 0 else out


def _path_arrays(realization: ChannelRealization):
    paths = realization.paths
    gains = np.array([p.gain for p in paths], dtype=complex)
    delays = np.array([p.delay for p in paths], dtype=float)
    a_r = np.array([steering_vector(p.aoa, realization.n_rx) for p in paths]).reshape(-1, realization.n_rx)
    a_t = np.array([steering_vector(p.aod, realization.n_tx) for p in paths]).reshape(-1, realization.n_tx)
    return gains, delays, a_r, a_t


def delay_tap(realization: ChannelRealization, d: int) -> np.ndarray:
    """The ``d``-th delay tap ``sum_l alpha_l p(d T_s - tau_l) a_R a_T^H``."""
    if not 0 <= d < realization.n_taps:
        raise IndexError(f"tap index {d} outside [0, {realization.n_taps - 1}]")
    gains, delays, a_r, a_t = _path_arrays(realization)
    weights = gains * raised_cosine(d * realization.pulse.symbol_period - delays, realization.pulse)
    return np.einsum("l,lr,lt->rt", weights, a_r, a_t.conj())


def delay_taps(realization: ChannelRealization) -> np.ndarray:
    """All taps stacked as an ``(N_c, N_r, N_t)`` array."""
    return np.stack([delay_tap(realization, d) for d in range(realization.n_taps)])


def _rho_matrix(realization: ChannelRealization, delays: np.ndarray) -> np.ndarray:
    # (K, L) array of sum_d p(d T_s - tau_l) exp(-j 2 pi k d / K)
    K, n_c = realization.n_subcarriers, realization.n_taps
    d = np.arange(n_c)
    pulse_vals = raised_cosine(d[:, None] * realization.pulse.symbol_period - delays[None, :], realization.pulse)
    pulse_vals = np.asarray(pulse_vals).reshape(n_c, -1)
    phases = np.exp(-2j * np.pi * np.outer(np.arange(K), d) / K)
    return phases @ pulse_vals


def rho(realization: ChannelRealization, k: int, l: int) -> complex:
    """Pulse-weighted DFT coefficient of path ``l`` (1-based) at subcarrier ``k``."""
    if not 0 <= k < realization.n_subcarriers:
        raise IndexError(f"subcarrier {k} outside [0, {realization.n_subcarriers - 1}]")
    if not 1 <= l <= realization.n_paths:
        raise IndexError(f"path {l} outside [1, {realization.n_paths}]")
    delay = realization.paths[l - 1].delay
    d = np.arange(realization.n_taps)
    p = raised_cosine(d * realization.pulse.symbol_period - delay, realization.pulse)
    return complex(np.sum(p * np.exp(-2j * np.pi * k * d / realization.n_subcarriers)))


def path_gains(realization: ChannelRealization) -> np.ndarray:
    """``(K, L)`` array of ``alpha_l * rho_{k,l}``, the per-subcarrier atom coefficients."""
    gains, delays, _, _ = _path_arrays(realization)
    return _rho_matrix(realization, delays) * gains[None, :]


def frequency_channel_from_taps(realization: ChannelRealization) -> np.ndarray:
    K = realization.n_subcarriers
    taps = delay_taps(realization)
    phases = np.exp(-2j * np.pi * np.outer(np.arange(K), np.arange(realization.n_taps)) / K)
    return np.einsum("kd,drt->krt", phases, taps)


def frequency_channel_from_paths(realization: ChannelRealization) -> np.ndarray:
    _, _, a_r, a_t = _path_arrays(realization)
    gamma = path_gains(realization)
    return np.einsum("kl,lr,lt->krt", gamma, a_r, a_t.conj())


def frequency_channel(realization: ChannelRealization) -> FrequencyChannel:
    """Frequency-domain channel for every subcarrier.

    Computed as the DFT of the delay taps and cross-checked against the
    per-path form ``sum_l alpha_l rho_{k,l} a_R a_T^H``.
    """
    from_taps = frequency_channel_from_taps(realization)
    from_paths = frequency_channel_from_paths(realization)
    scale = np.maximum(1.0, np.linalg.norm(from_taps, axis=(1, 2)))
    gap = np.linalg.norm(from_taps - from_paths, axis=(1, 2))
    if np.any(gap > 1e-9 * scale):
        raise NumericalError(f"tap and path forms disagree (max gap {gap.max():.3e})")
    return FrequencyChannel(from_taps)


def vectorize_channel(freq: FrequencyChannel, k: int) -> np.ndarray:
    """Column-major ``vec(H[k])``, consistent with atoms ``conj(a_T) kron a_R``."""
    if not 0 <= k < freq.n_subcarriers:
        raise IndexError(f"subcarrier {k} outside [0, {freq.n_subcarriers - 1}]")
    return freq[k].reshape(-1, order="F")


def unvectorize(h_v: np.ndarray, n_rx: int, n_tx: int) -> np.ndarray:
    return np.asarray(h_v).reshape((n_rx, n_tx), order="F")


def random_realization(
    n_paths: int,
    n_tx: int,
    n_rx: int,
    n_taps: int = 4,
    n_subcarriers: int = 32,
    pulse: PulseShape | None = None,
    seed=None,
) -> ChannelRealization:
    """Draw a channel: CN(0, 1) gains, uniform delays on [0, (N_c-1) T_s], uniform angles on [0, pi)."""
    pulse = pulse or PulseShape()
    rng = np.random.default_rng(seed)
    gains = (rng.standard_normal(n_paths) + 1j * rng.standard_normal(n_paths)) / np.sqrt(2.0)
    delays = rng.uniform(0.0, (n_taps - 1) * pulse.symbol_period, n_paths)
    aoas = rng.uniform(0.0, np.pi, n_paths)
    aods = rng.uniform(0.0, np.pi, n_paths)
    paths = tuple(ChannelPath(complex(g), float(t), float(a), float(b)) for g, t, a, b in zip(gains, delays, aoas, aods))
    return ChannelRealization(paths, ArrayGeometry(n_tx), ArrayGeometry(n_rx), pulse, n_taps, n_subcarriers)
