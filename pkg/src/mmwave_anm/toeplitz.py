"""Two-level Toeplitz embedding, its adjoint, atoms and PSD projection.

Rows and columns of the ``(N_t N_r) x (N_t N_r)`` embedding are indexed by
``i * N_r + r`` (transmit element ``i`` outer, receive element ``r`` inner),
the same order as ``conj(a_T) kron a_R``.  Entry ``((i, r), (i', r'))`` holds
the spectrum value at transmit lag ``p = i - i'`` and receive lag
``q = r - r'``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import steering_vector
from .errors import InvalidInputError, NumericalError

HERMITIAN_RTOL = 1e-8


@dataclass(frozen=True)
class TwoLevelSpectrum:
    """Lag array ``U`` of shape ``(2 N_t - 1, 2 N_r - 1)``.

    ``entries[p + N_t - 1, q + N_r - 1]`` is the value at lag ``(p, q)``.
    """

    entries: np.ndarray
    n_tx: int
    n_rx: int

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.shape != (2 * self.n_tx - 1, 2 * self.n_rx - 1):
            raise InvalidInputError(f"spectrum shape {arr.shape} does not match dims ({self.n_tx}, {self.n_rx})")
        object.__setattr__(self, "entries", arr)

    @classmethod
    def zeros(cls, n_tx: int, n_rx: int) -> TwoLevelSpectrum:
        return cls(np.zeros((2 * n_tx - 1, 2 * n_rx - 1), dtype=complex), n_tx, n_rx)

    def __call__(self, p: int, q: int) -> complex:
        return complex(self.entries[p + self.n_tx - 1, q + self.n_rx - 1])

    def symmetry_gap(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries[::-1, ::-1].conj()), initial=0.0))


@dataclass(frozen=True)
class Atom:
    aod: float
    aoa: float
    vector: np.ndarray


def atom(aod: float, aoa: float, n_tx: int, n_rx: int) -> Atom:
    """Unit-norm atom ``conj(a_T(aod)) kron a_R(aoa)``."""
    vec = np.kron(steering_vector(aod, n_tx).conj(), steering_vector(aoa, n_rx))
    return Atom(aod, aoa, vec)


def lag_multiplicity(n_tx: int, n_rx: int) -> np.ndarray:
    """How many embedding entries share each lag: ``(N_t - |p|)(N_r - |q|)``."""
    p = n_tx - np.abs(np.arange(-(n_tx - 1), n_tx))
    q = n_rx - np.abs(np.arange(-(n_rx - 1), n_rx))
    return np.outer(p, q).astype(float)


@lru_cache(maxsize=32)
def _lag_index(n_tx: int, n_rx: int) -> np.ndarray:
    # flat index into the (2N_t-1, 2N_r-1) lag array for every embedding entry
    i = np.repeat(np.arange(n_tx), n_rx)
    r = np.tile(np.arange(n_rx), n_tx)
    p = i[:, None] - i[None, :] + n_tx - 1
    q = r[:, None] - r[None, :] + n_rx - 1
    idx = p * (2 * n_rx - 1) + q
    idx.setflags(write=False)
    return idx


def toeplitz_embed(u: TwoLevelSpectrum, check: bool = True) -> np.ndarray:
    """Hermitian two-level Toeplitz matrix ``S(U)``."""
    if check:
        scale = max(1.0, float(np.max(np.abs(u.entries), initial=0.0)))
        if u.symmetry_gap() > HERMITIAN_RTOL * scale:
            raise InvalidInputError("spectrum is not conjugate-symmetric")
    return u.entries.ravel()[_lag_index(u.n_tx, u.n_rx)]


def toeplitz_adjoint(x: np.ndarray, n_tx: int, n_rx: int) -> TwoLevelSpectrum:
    """Sum ``x`` along each two-level diagonal; adjoint of :func:`toeplitz_embed`."""
    n = n_tx * n_rx
    x = np.asarray(x)
    if x.shape != (n, n):
        raise InvalidInputError(f"expected a {n}x{n} matrix, got {x.shape}")
    idx = _lag_index(n_tx, n_rx).ravel()
    size = (2 * n_tx - 1) * (2 * n_rx - 1)
    flat = x.ravel()
    out = np.bincount(idx, weights=flat.real, minlength=size) + 1j * np.bincount(idx, weights=flat.imag, minlength=size)
    return TwoLevelSpectrum(out.reshape(2 * n_tx - 1, 2 * n_rx - 1), n_tx, n_rx)


def atom_spectrum(a: Atom, n_tx: int, n_rx: int, power: float = 1.0) -> TwoLevelSpectrum:
    """Lags of ``power * exp(-j pi p cos(aod) + j pi q cos(aoa))``; embeds to ``power * N g g^H``."""
    p = np.arange(-(n_tx - 1), n_tx)
    q = np.arange(-(n_rx - 1), n_rx)
    entries = power * np.exp(-1j * np.pi * p[:, None] * np.cos(a.aod) + 1j * np.pi * q[None, :] * np.cos(a.aoa))
    return TwoLevelSpectrum(entries, n_tx, n_rx)


def hermitian_part(x: np.ndarray, rtol: float = HERMITIAN_RTOL) -> np.ndarray:
    x = np.asarray(x)
    gap = np.linalg.norm(x - x.conj().T)
    if gap > rtol * max(1.0, np.linalg.norm(x)):
        raise InvalidInputError(f"matrix is not Hermitian (asymmetry {gap:.3e})")
    return 0.5 * (x + x.conj().T)


def psd_project(x: np.ndarray) -> np.ndarray:
    """Frobenius-nearest PSD matrix: clip negative eigenvalues to zero."""
    x = hermitian_part(x)
    try:
        w, v = np.linalg.eigh(x)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    pos = w > 0
    vp = v[:, pos]
    out = (vp * w[pos]) @ vp.conj().T
    return 0.5 * (out + out.conj().T)
