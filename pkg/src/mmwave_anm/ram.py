"""Reweighted atomic-norm minimization.

Starts from the plain ANM solution and re-solves the SDP with the trace term
weighted by ``Theta_j = (S(U_{j-1}) + eps I)^{-1}``, which penalizes
directions the previous Toeplitz estimate already considers empty.

The solver applies the weight as ``eps * Theta_j`` so that its eigenvalues lie
in (0, 1]: an empty previous estimate gives back plain ANM with the same zeta,
and directions the previous estimate already uses get a discount instead of
every other direction receiving a ``1/eps`` penalty.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .anm import AnmConfig, AnmSolution, _resolve_zeta, solve_anm, subcarrier_zeta
from .errors import InvalidConfigurationError, NumericalError
from .sounding import MeasurementSet
from .toeplitz import TwoLevelSpectrum, toeplitz_embed

DIVERGENCE_FACTOR = 10.0


@dataclass(frozen=True)
class RamConfig:
    iterations: int = 5
    epsilon: float | None = None
    epsilon_scale: float = 1.0
    inner: AnmConfig = field(default_factory=AnmConfig)

    def __post_init__(self):
        if self.iterations < 0:
            raise InvalidConfigurationError("iterations must be >= 0")
        if self.epsilon is not None and not self.epsilon > 0:
            raise InvalidConfigurationError("epsilon must be positive")
        if not self.epsilon_scale > 0:
            raise InvalidConfigurationError("epsilon_scale must be positive")


def reweight_matrix(u_prev: TwoLevelSpectrum, epsilon: float) -> np.ndarray:
    """``(S(U_prev) + epsilon I)^{-1}`` via an eigendecomposition of ``S(U_prev)``."""
    if not epsilon > 0:
        raise InvalidConfigurationError("epsilon must be positive")
    s = toeplitz_embed(u_prev)
    w, v = np.linalg.eigh(s)
    trace = float(np.sum(w))
    if w[0] < -1e-6 * (1.0 + abs(trace)):
        raise InvalidConfigurationError(f"S(U_prev) is not PSD (min eigenvalue {w[0]:.3e})")
    shifted = np.maximum(w, 0.0) + epsilon
    cond = shifted[-1] / shifted[0]
    if cond * np.finfo(float).eps > 1.0:
        raise NumericalError(f"reweighting matrix is singular to working precision (condition {cond:.3e})")
    theta = (v / shifted) @ v.conj().T
    return 0.5 * (theta + theta.conj().T)


def _data_fit(y, phi, h) -> float:
    return 0.5 * float(np.linalg.norm(y - phi @ h) ** 2)


def solve_ram(
    y: np.ndarray,
    phi: np.ndarray,
    config: RamConfig | None = None,
    zeta: float | None = None,
    n_tx: int | None = None,
    n_rx: int | None = None,
) -> AnmSolution:
    """ANM followed by ``config.iterations`` reweighted re-solves.

    Each re-solve warm-starts from the previous ADMM state.  The loop also
    stops once a re-solve moves ``h`` by less than ``inner.tol_primal``
    relative to its norm.  If the data-fit
    term grows by more than a factor of ten between outer iterations the loop
    stops and the last good iterate is returned with ``aborted`` set.
    """
    config = config or RamConfig()
    zeta = _resolve_zeta(config.inner, zeta)
    epsilon = config.epsilon if config.epsilon is not None else zeta * config.epsilon_scale
    inner = replace(config.inner, weight=None)
    sol = solve_anm(y, phi, inner, zeta=zeta, n_tx=n_tx, n_rx=n_rx)
    if config.iterations == 0:
        return sol
    if not epsilon > 0:
        raise InvalidConfigurationError("epsilon must be positive; set it explicitly when zeta is zero")

    total_iters = sol.iterations
    history = [sol.residual_history]
    best = sol
    fit = _data_fit(y, phi, sol.h_v)
    for _ in range(config.iterations):
        theta = epsilon * reweight_matrix(best.spectrum, epsilon)
        nxt = solve_anm(
            y,
            phi,
            replace(inner, weight=theta),
            zeta=zeta,
            n_tx=best.spectrum.n_tx,
            n_rx=best.spectrum.n_rx,
            _warm=best.state,
        )
        total_iters += nxt.iterations
        history.append(nxt.residual_history)
        new_fit = _data_fit(y, phi, nxt.h_v)
        if new_fit > DIVERGENCE_FACTOR * max(fit, np.finfo(float).tiny):
            best = replace(best, aborted=True)
            break
        change = np.linalg.norm(nxt.h_v - best.h_v)
        scale = np.linalg.norm(best.h_v)
        best, fit = nxt, new_fit
        if change <= inner.tol_primal * scale:
            break

    return replace(best, iterations=total_iters, residual_history=np.concatenate(history))


def estimate_subcarrier(measurements: MeasurementSet, k: int, config: RamConfig, n_tx=None, n_rx=None) -> AnmSolution:
    if not 0 <= k < measurements.n_subcarriers:
        raise IndexError(f"subcarrier {k} outside [0, {measurements.n_subcarriers - 1}]")
    phi = measurements.sensing[k]
    if n_tx is None and measurements.frames:
        n_tx = measurements.frames[0].precoder.shape[0]
        n_rx = measurements.frames[0].combiner.shape[0]
    zeta = subcarrier_zeta(measurements, phi.shape[1], config.inner)
    inner = replace(config.inner, zeta_override=None)
    return solve_ram(measurements.received[k], phi, replace(config, inner=inner), zeta=zeta, n_tx=n_tx, n_rx=n_rx)
