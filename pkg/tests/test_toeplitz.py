import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmwave_anm.errors import InvalidInputError
from mmwave_anm.toeplitz import (
    TwoLevelSpectrum,
    atom,
    atom_spectrum,
    lag_multiplicity,
    psd_project,
    toeplitz_adjoint,
    toeplitz_embed,
)


def random_spectrum(rng, n_tx, n_rx):
    raw = rng.standard_normal((2 * n_tx - 1, 2 * n_rx - 1)) + 1j * rng.standard_normal((2 * n_tx - 1, 2 * n_rx - 1))
    return TwoLevelSpectrum(0.5 * (raw + raw[::-1, ::-1].conj()), n_tx, n_rx)


def random_hermitian(rng, n):
    x = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return x + x.conj().T


def embed_by_loops(u):
    # entry ((i, r), (i', r')) = U(i - i', r - r'), written with explicit loops
    n_tx, n_rx = u.n_tx, u.n_rx
    out = np.zeros((n_tx * n_rx, n_tx * n_rx), dtype=complex)
    for i in range(n_tx):
        for r in range(n_rx):
            for i2 in range(n_tx):
                for r2 in range(n_rx):
                    out[i * n_rx + r, i2 * n_rx + r2] = u(i - i2, r - r2)
    return out


class TestAtom:
    def test_scalar(self):
        assert atom(0.4, 1.9, 1, 1).vector == pytest.approx(np.array([1.0]))

    def test_broadside(self):
        np.testing.assert_allclose(atom(np.pi / 2, np.pi / 2, 3, 4).vector, np.full(12, 1 / np.sqrt(12)), atol=1e-15)

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = atom(rng.uniform(0, np.pi), rng.uniform(0, np.pi), 4, 4).vector
            assert abs(np.linalg.norm(g) - 1) < 1e-12


class TestEmbed:
    def test_zero(self):
        assert not np.any(toeplitz_embed(TwoLevelSpectrum.zeros(3, 2)))

    def test_scalar(self):
        assert toeplitz_embed(TwoLevelSpectrum(np.array([[2.5]]), 1, 1)).tolist() == [[2.5]]

    def test_single_atom_outer_product(self):
        a = atom(0.8, 2.3, 3, 4)
        s = toeplitz_embed(atom_spectrum(a, 3, 4, power=1.7))
        np.testing.assert_allclose(s, 1.7 * 12 * np.outer(a.vector, a.vector.conj()), atol=1e-10)

    def test_matches_loops(self):
        u = random_spectrum(np.random.default_rng(1), 3, 4)
        np.testing.assert_array_equal(toeplitz_embed(u), embed_by_loops(u))

    def test_block_structure(self):
        u = random_spectrum(np.random.default_rng(2), 3, 3)
        s = toeplitz_embed(u)
        # block (1, 0) is the Toeplitz matrix of the transmit-lag-1 slice
        block = s[3:6, 0:3]
        np.testing.assert_array_equal(block[1:, 1:], block[:-1, :-1])
        assert block[0, 0] == u(1, 0)

    def test_rejects_asymmetric(self):
        bad = TwoLevelSpectrum(np.arange(9).reshape(3, 3) * 1j, 2, 2)
        with pytest.raises(InvalidInputError):
            toeplitz_embed(bad)

    def test_hermitian_exactly(self):
        u = random_spectrum(np.random.default_rng(3), 4, 3)
        s = toeplitz_embed(u)
        assert np.array_equal(s, s.conj().T)

    def test_linear(self):
        rng = np.random.default_rng(4)
        u1, u2 = random_spectrum(rng, 3, 3), random_spectrum(rng, 3, 3)
        mix = TwoLevelSpectrum(1.5 * u1.entries - 0.3 * u2.entries, 3, 3)
        np.testing.assert_allclose(toeplitz_embed(mix), 1.5 * toeplitz_embed(u1) - 0.3 * toeplitz_embed(u2), atol=1e-13)


class TestAdjoint:
    def test_identity(self):
        u = toeplitz_adjoint(np.eye(4), 2, 2)
        assert u(0, 0) == 4
        mask = np.ones_like(u.entries, dtype=bool)
        mask[1, 1] = False
        assert not np.any(u.entries[mask])

    def test_adjoint_identity_random_pairs(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            u = random_spectrum(rng, 8, 8)
            x = random_hermitian(rng, 64)
            lhs = np.vdot(toeplitz_embed(u), x)
            rhs = np.vdot(u.entries, toeplitz_adjoint(x, 8, 8).entries)
            assert abs(lhs - rhs) <= 1e-10 * abs(lhs)

    def test_round_trip_multiplicity(self):
        rng = np.random.default_rng(6)
        u = random_spectrum(rng, 3, 5)
        back = toeplitz_adjoint(toeplitz_embed(u), 3, 5)
        p = np.arange(-2, 3)[:, None]
        q = np.arange(-4, 5)[None, :]
        counts = (3 - np.abs(p)) * (5 - np.abs(q))
        np.testing.assert_allclose(back.entries, counts * u.entries, atol=1e-12)
        np.testing.assert_array_equal(lag_multiplicity(3, 5), counts)

    def test_size_mismatch(self):
        with pytest.raises(InvalidInputError):
            toeplitz_adjoint(np.eye(5), 2, 2)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0, np.pi, exclude_max=True), st.floats(0, np.pi, exclude_max=True), st.integers(1, 4), st.integers(1, 4))
    def test_atom_outer_product_in_range(self, aod, aoa, n_tx, n_rx):
        g = atom(aod, aoa, n_tx, n_rx).vector
        gg = np.outer(g, g.conj())
        u = toeplitz_adjoint(gg, n_tx, n_rx)
        rebuilt = toeplitz_embed(TwoLevelSpectrum(u.entries / lag_multiplicity(n_tx, n_rx), n_tx, n_rx))
        np.testing.assert_allclose(rebuilt, gg, atol=1e-12)


class TestPsdProject:
    def test_psd_unchanged(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        x = a @ a.conj().T
        np.testing.assert_allclose(psd_project(x), x, atol=1e-10)

    def test_clip(self):
        np.testing.assert_allclose(psd_project(np.diag([1.0, -1.0])), np.diag([1.0, 0.0]), atol=1e-15)

    def test_nearest_among_random_candidates(self):
        rng = np.random.default_rng(8)
        x = random_hermitian(rng, 6)
        p = psd_project(x)
        best = np.linalg.norm(x - p)
        for _ in range(500):
            a = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
            candidate = a @ a.conj().T
            assert np.linalg.norm(x - candidate) >= best - 1e-12
            # candidates near the projection should not beat it either
            near = psd_project(p + 1e-2 * random_hermitian(rng, 6))
            assert np.linalg.norm(x - near) >= best - 1e-12

    def test_idempotent(self):
        x = random_hermitian(np.random.default_rng(9), 8)
        once = psd_project(x)
        np.testing.assert_allclose(psd_project(once), once, atol=1e-10)

    def test_symmetrizes_small_asymmetry(self):
        x = np.diag([2.0, 1.0]).astype(complex)
        x[0, 1] = 1e-12
        assert np.allclose(psd_project(x), psd_project(x).conj().T)

    def test_rejects_non_hermitian(self):
        with pytest.raises(InvalidInputError):
            psd_project(np.array([[1.0, 2.0], [0.0, 1.0]]))
