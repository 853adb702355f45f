"""Hybrid training frames, sensing operators and noisy measurements.

Each training frame uses a frequency-flat analog precoder ``F`` (``N_t x N_s``)
and combiner ``W`` (``N_r x N_RF``) whose entries are constant-modulus with
phases from a ``Q``-bit phase-shifter codebook.  Stacking ``M`` frames gives,
per subcarrier ``k``, the linear model ``y[k] = Phi[k] vec(H[k]) + q[k]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FrequencyChannel, vectorize_channel
from .errors import InvalidConfigurationError


@dataclass(frozen=True)
class PhaseCodebook:
    bits: int = 7

    def __post_init__(self):
        if self.bits < 1:
            raise InvalidConfigurationError("codebook needs at least one bit")

    @property
    def size(self) -> int:
        return 2 ** self.bits

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.size) / self.size


@dataclass(frozen=True)
class TrainingFrame:
    precoder: np.ndarray  # (N_t, N_s)
    combiner: np.ndarray  # (N_r, N_RF)
    symbols: np.ndarray  # (K, N_s)

    def transmitted(self, k: int) -> np.ndarray:
        return self.precoder @ self.symbols[k]


@dataclass(frozen=True)
class MeasurementSet:
    received: np.ndarray  # (K, M * N_RF)
    sensing: np.ndarray  # (K, M * N_RF, N_t * N_r)
    noise_std: float
    frames: tuple

    @property
    def n_frames(self) -> int:
        return len(self.frames)

    @property
    def n_subcarriers(self) -> int:
        return self.received.shape[0]


def _phase_matrix(rng, codebook: PhaseCodebook, shape, n: int) -> np.ndarray:
    idx = rng.integers(0, codebook.size, size=shape)
    return np.exp(1j * codebook.angles[idx]) / np.sqrt(n)


def gen_frames(
    n_frames: int,
    n_tx: int,
    n_rx: int,
    n_rf: int,
    n_subcarriers: int,
    codebook: PhaseCodebook | None = None,
    power: float = 1.0,
    seed=None,
) -> list[TrainingFrame]:
    """Draw ``n_frames`` random quantized-phase training frames with QPSK pilots.

    Frames are drawn one after another from a single stream, so the first
    ``m`` frames for a given seed do not depend on ``n_frames``.
    """
    if n_frames < 1:
        raise InvalidConfigurationError("need at least one training frame")
    if n_rf > min(n_tx, n_rx) or n_rf < 1:
        raise InvalidConfigurationError(f"N_RF={n_rf} must lie in [1, min(N_t, N_r)={min(n_tx, n_rx)}]")
    codebook = codebook or PhaseCodebook()
    n_s = n_rf
    amp = np.sqrt(power / n_s / 2.0)
    rng = np.random.default_rng(seed)
    frames = []
    for _ in range(n_frames):
        precoder = _phase_matrix(rng, codebook, (n_tx, n_s), n_tx)
        combiner = _phase_matrix(rng, codebook, (n_rx, n_rf), n_rx)
        signs = rng.integers(0, 2, size=(2, n_subcarriers, n_s)) * 2 - 1
        symbols = amp * (signs[0] + 1j * signs[1])
        frames.append(TrainingFrame(precoder, combiner, symbols))
    return frames


def build_phi(frames, k: int) -> np.ndarray:
    """Stack ``x_m[k]^T kron W_m^H`` over frames into the sensing matrix ``Phi[k]``."""
    if not frames:
        raise InvalidConfigurationError("no training frames")
    return np.vstack([np.kron(f.transmitted(k)[None, :], f.combiner.conj().T) for f in frames])


def effective_noise_std(frames, sigma: float) -> float:
    """Average per-measurement noise std after combining: ``sigma * sqrt(mean ||row of W^H||^2)``."""
    if sigma < 0:
        raise InvalidConfigurationError("sigma must be non-negative")
    if sigma == 0:
        return 0.0
    row_power = np.concatenate([np.sum(np.abs(f.combiner) ** 2, axis=0) for f in frames])
    return float(sigma * np.sqrt(row_power.mean()))


def noise_std_for_snr(snr_db: float, power: float, n_subcarriers: int) -> float:
    """``sigma`` such that ``SNR = P / (K sigma^2)``; infinite SNR gives 0."""
    if np.isinf(snr_db) and snr_db > 0:
        return 0.0
    return float(np.sqrt(power / (n_subcarriers * 10.0 ** (snr_db / 10.0))))


def receive(
    freq: FrequencyChannel,
    frames,
    snr_db: float,
    power: float = 1.0,
    seed=None,
    noise_std: float | None = None,
) -> MeasurementSet:
    """Synthesize ``y_m[k] = W_m^H H[k] x_m[k] + W_m^H z_m[k]`` for all frames and subcarriers.

    The noise ``z_m[k] ~ CN(0, sigma^2 I)`` uses ``sigma^2 = P / (K * SNR)``
    unless ``noise_std`` is given.  Noise is drawn as an ``(M, K, N_r)`` block
    from the seed, frame-major, so prefixes of the frame list see the same
    noise.
    """
    K = freq.n_subcarriers
    n_rx, n_tx = freq.shape
    frames = tuple(frames)
    if not frames:
        raise InvalidConfigurationError("no training frames")
    for f in frames:
        if f.precoder.shape[0] != n_tx or f.combiner.shape[0] != n_rx or f.symbols.shape[0] < K:
            raise InvalidConfigurationError("training frames do not match the channel dimensions")
    sigma = noise_std_for_snr(snr_db, power, K) if noise_std is None else float(noise_std)
    rng = np.random.default_rng(seed)
    parts = rng.standard_normal((len(frames), K, n_rx, 2))
    z = sigma * (parts[..., 0] + 1j * parts[..., 1]) / np.sqrt(2.0)

    sensing = np.stack([build_phi(frames, k) for k in range(K)])
    h = np.stack([vectorize_channel(freq, k) for k in range(K)])
    clean = np.einsum("kmn,kn->km", sensing, h)
    noise = np.stack(
        [np.concatenate([f.combiner.conj().T @ z[m, k] for m, f in enumerate(frames)]) for k in range(K)]
    )
    received = clean + noise if sigma > 0 else clean
    return MeasurementSet(received, sensing, sigma, frames)
