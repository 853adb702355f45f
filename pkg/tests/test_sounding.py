import numpy as np
import pytest

from mmwave_anm.channel import FrequencyChannel, PulseShape, frequency_channel, random_realization, vectorize_channel
from mmwave_anm.errors import InvalidConfigurationError
from mmwave_anm.sounding import (
    PhaseCodebook,
    TrainingFrame,
    build_phi,
    effective_noise_std,
    gen_frames,
    noise_std_for_snr,
    receive,
)


@pytest.fixture
def channel():
    return frequency_channel(random_realization(2, 4, 4, 4, 6, PulseShape(), seed=9))


def codebook_member(values, n, codebook):
    # every entry must be exactly exp(j*angle)/sqrt(n) for some codebook angle
    table = np.exp(1j * codebook.angles) / np.sqrt(n)
    return all(np.any(table == v) for v in np.ravel(values))


class TestCodebook:
    def test_angles(self):
        cb = PhaseCodebook(3)
        assert cb.size == 8
        assert cb.angles.min() == 0 and cb.angles.max() < 2 * np.pi

    def test_rejects_zero_bits(self):
        with pytest.raises(InvalidConfigurationError):
            PhaseCodebook(0)


class TestGenFrames:
    def test_constant_modulus(self):
        for f in gen_frames(5, 8, 6, 2, 4, seed=0):
            np.testing.assert_allclose(np.abs(f.precoder), 1 / np.sqrt(8), rtol=0, atol=1e-15)
            np.testing.assert_allclose(np.abs(f.combiner), 1 / np.sqrt(6), rtol=0, atol=1e-15)

    def test_one_bit_phases(self):
        for f in gen_frames(4, 4, 4, 2, 2, PhaseCodebook(1), seed=3):
            phases = np.angle(np.concatenate([f.precoder.ravel(), f.combiner.ravel()]))
            assert np.all(np.isclose(phases, 0) | np.isclose(np.abs(phases), np.pi))

    def test_full_scale_shapes(self):
        frames = gen_frames(60, 16, 16, 2, 32, seed=1)
        assert len(frames) == 60
        assert all(f.precoder.shape == (16, 2) and f.combiner.shape == (16, 2) for f in frames)
        assert all(f.symbols.shape == (32, 2) for f in frames)

    def test_phases_in_codebook(self):
        cb = PhaseCodebook(7)
        for f in gen_frames(3, 8, 4, 2, 2, cb, seed=2):
            assert codebook_member(f.precoder, 8, cb)
            assert codebook_member(f.combiner, 4, cb)

    def test_symbol_covariance(self):
        frames = gen_frames(400, 4, 4, 2, 32, power=2.0, seed=4)
        s = np.concatenate([f.symbols for f in frames])
        cov = s.T @ s.conj() / s.shape[0]
        np.testing.assert_allclose(cov, np.eye(2), atol=0.05)

    def test_prefix_stable(self):
        short = gen_frames(3, 4, 4, 2, 5, seed=8)
        long = gen_frames(7, 4, 4, 2, 5, seed=8)
        for a, b in zip(short, long):
            np.testing.assert_array_equal(a.precoder, b.precoder)
            np.testing.assert_array_equal(a.symbols, b.symbols)

    def test_too_many_rf_chains(self):
        with pytest.raises(InvalidConfigurationError):
            gen_frames(2, 4, 2, 3, 2, seed=0)


class TestBuildPhi:
    def test_selects_column(self):
        h = np.arange(9).reshape(3, 3) + 1j
        frame = TrainingFrame(np.eye(3)[:, :1], np.eye(3), np.ones((1, 1)))
        phi = build_phi([frame], 0)
        np.testing.assert_allclose(phi @ h.reshape(-1, order="F"), h[:, 0])

    def test_shape(self):
        assert build_phi(gen_frames(3, 4, 4, 2, 2, seed=0), 1).shape == (6, 16)

    def test_matches_direct_model(self, channel):
        frames = gen_frames(5, 4, 4, 2, 6, seed=6)
        for k in (0, 4):
            direct = np.concatenate([f.combiner.conj().T @ channel[k] @ f.transmitted(k) for f in frames])
            np.testing.assert_allclose(build_phi(frames, k) @ vectorize_channel(channel, k), direct, atol=1e-12)

    def test_linear_in_symbols(self):
        frames = gen_frames(2, 4, 4, 2, 2, seed=5)
        doubled = [TrainingFrame(frames[0].precoder, frames[0].combiner, 2 * frames[0].symbols), frames[1]]
        a, b = build_phi(frames, 0), build_phi(doubled, 0)
        np.testing.assert_allclose(b[:2], 2 * a[:2])
        np.testing.assert_array_equal(b[2:], a[2:])


class TestReceive:
    def test_noiseless(self, channel):
        frames = gen_frames(4, 4, 4, 2, 6, seed=1)
        ms = receive(channel, frames, np.inf, seed=2)
        assert ms.noise_std == 0
        for k in range(6):
            np.testing.assert_allclose(ms.received[k], ms.sensing[k] @ vectorize_channel(channel, k), rtol=0, atol=1e-13)

    def test_noise_level_from_snr(self):
        assert noise_std_for_snr(10.0, 1.0, 32) ** 2 == pytest.approx(1 / 320)

    def test_noise_covariance(self):
        frames = gen_frames(1, 4, 4, 2, 10_000, seed=3)
        zero = FrequencyChannel(np.zeros((10_000, 4, 4)))
        ms = receive(zero, frames, 0.0, seed=4, noise_std=0.7)
        samples = ms.received  # (K, N_RF), each row is W^H z
        emp = samples.T @ samples.conj() / samples.shape[0]
        w = frames[0].combiner
        expected = 0.49 * w.conj().T @ w
        assert np.linalg.norm(emp - expected) <= 0.05 * np.linalg.norm(expected)

    def test_seed_reproducible(self, channel):
        frames = gen_frames(3, 4, 4, 2, 6, seed=1)
        a = receive(channel, frames, 5.0, seed=11)
        b = receive(channel, frames, 5.0, seed=11)
        assert a.received.tobytes() == b.received.tobytes()

    def test_dimension_mismatch(self, channel):
        with pytest.raises(InvalidConfigurationError):
            receive(channel, gen_frames(2, 5, 4, 2, 6, seed=0), 10.0, seed=0)

    def test_dimensions(self, channel):
        ms = receive(channel, gen_frames(3, 4, 4, 2, 6, seed=0), 10.0, seed=0)
        assert ms.received.shape == (6, 6)
        assert ms.sensing.shape == (6, 6, 16)
        assert ms.n_frames == 3


class TestEffectiveNoise:
    def test_orthonormal_combiner(self):
        q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((6, 3)) + 0j)
        frame = TrainingFrame(np.ones((4, 3)), q, np.ones((1, 3)))
        assert effective_noise_std([frame], 0.3) == pytest.approx(0.3, abs=1e-12)

    def test_zero_sigma(self):
        assert effective_noise_std(gen_frames(2, 4, 4, 2, 2, seed=0), 0.0) == 0.0

    def test_constant_modulus(self):
        frames = gen_frames(4, 16, 16, 2, 2, seed=0)
        row_norms = np.concatenate([np.linalg.norm(f.combiner.conj().T, axis=1) for f in frames])
        np.testing.assert_allclose(row_norms, 1.0, atol=1e-12)
        assert effective_noise_std(frames, 0.25) == pytest.approx(0.25, abs=1e-12)
