"""On-grid OMP baseline over a uniform angular dictionary."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError
from .toeplitz import atom

DEFAULT_GRID = 64


@dataclass(frozen=True)
class AngularDictionary:
    """Columns ``g(theta_i, phi_j)`` with ``theta_i = i pi / G``, ``phi_j = j pi / G``.

    Column ``i * G + j`` pairs AoD grid point ``i`` with AoA grid point ``j``.
    """

    grid_size: int
    atoms: np.ndarray
    n_tx: int
    n_rx: int

    def angles(self, column: int) -> tuple[float, float]:
        i, j = divmod(column, self.grid_size)
        return i * np.pi / self.grid_size, j * np.pi / self.grid_size


def build_dictionary(grid_size: int, n_tx: int, n_rx: int) -> AngularDictionary:
    if grid_size < 1:
        raise InvalidConfigurationError("grid_size must be >= 1")
    grid = np.arange(grid_size) * np.pi / grid_size
    cols = [atom(t, p, n_tx, n_rx).vector for t in grid for p in grid]
    return AngularDictionary(grid_size, np.stack(cols, axis=1), n_tx, n_rx)


@dataclass
class OmpResult:
    h_v: np.ndarray
    support: list
    coefficients: np.ndarray
    residual_norms: list

    @property
    def iterations(self) -> int:
        return len(self.support)


def omp_path(y, phi, dictionary: AngularDictionary, max_atoms: int, residual_tol: float = 1e-3) -> OmpResult:
    """Greedy OMP on ``Phi @ atoms``; keeps the support and residual trace.

    Columns are picked by normalized correlation with the residual, then all
    selected coefficients are refit by least squares.  A rank-deficient refit
    drops the newest column and stops.
    """
    y = np.asarray(y, dtype=complex).ravel()
    n_atoms = dictionary.atoms.shape[1]
    if max_atoms > n_atoms:
        raise InvalidConfigurationError(f"max_atoms={max_atoms} exceeds dictionary size {n_atoms}")
    n = dictionary.atoms.shape[0]
    y_norm = float(np.linalg.norm(y))
    residual_norms = [y_norm]
    if y_norm == 0.0 or max_atoms < 1:
        return OmpResult(np.zeros(n, dtype=complex), [], np.zeros(0, dtype=complex), residual_norms)

    sensed = np.asarray(phi) @ dictionary.atoms
    col_norms = np.linalg.norm(sensed, axis=0)
    col_norms[col_norms == 0] = np.inf
    support: list[int] = []
    coef = np.zeros(0, dtype=complex)
    residual = y
    for _ in range(max_atoms):
        score = np.abs(sensed.conj().T @ residual) / col_norms
        score[support] = -1.0
        candidate = support + [int(np.argmax(score))]
        sub = sensed[:, candidate]
        new_coef, _, rank, _ = np.linalg.lstsq(sub, y, rcond=None)
        if rank < len(candidate):
            break
        support, coef = candidate, new_coef
        residual = y - sub @ coef
        residual_norms.append(float(np.linalg.norm(residual)))
        if residual_norms[-1] <= residual_tol * y_norm:
            break
    h_v = dictionary.atoms[:, support] @ coef if support else np.zeros(n, dtype=complex)
    return OmpResult(h_v, support, coef, residual_norms)


def omp_estimate(y, phi, dictionary: AngularDictionary, max_atoms: int, residual_tol: float = 1e-3) -> np.ndarray:
    """OMP channel estimate ``A x`` for one subcarrier."""
    return omp_path(y, phi, dictionary, max_atoms, residual_tol).h_v
