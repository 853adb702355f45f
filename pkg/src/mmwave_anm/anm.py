"""Atomic-norm channel estimation via ADMM on the two-level Toeplitz SDP.

Per subcarrier the estimator solves

    minimize  1/2 ||y - Phi h||^2 + zeta/(2n) tr(Theta S(U)) + zeta nu / 2
    s.t.      Xi = [[S(U), h], [h^H, nu]]  PSD

with ``n = N_t N_r`` and ``Theta = I`` for plain ANM.  The splitting keeps
``(h, U, nu)`` in one block and a PSD copy ``Z`` of ``Xi`` in the other.  The
first block has a closed form: a ridge solve for ``h``, a scalar update for
``nu`` and a lag-wise average (adjoint over multiplicity) for ``U``.  The
second block is an eigenvalue clip.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .channel import unvectorize
from .errors import InvalidConfigurationError, InvalidInputError
from .sounding import MeasurementSet, effective_noise_std
from .toeplitz import TwoLevelSpectrum, lag_multiplicity, toeplitz_adjoint, toeplitz_embed

FEASIBILITY_RTOL = 1e-6
BALANCE_EVERY = 10


@dataclass(frozen=True)
class AnmConfig:
    zeta_override: float | None = None
    zeta_scale: float = 1.0
    max_iters: int = 2000
    penalty: float = 0.05
    tol_primal: float = 1e-7
    tol_dual: float = 1e-7
    weight: np.ndarray | None = None
    adaptive_penalty: bool = True
    relaxation: float = 1.6

    def __post_init__(self):
        if self.zeta_override is not None and not self.zeta_override > 0:
            raise InvalidConfigurationError("zeta_override must be positive")
        if not (self.zeta_scale > 0 and self.penalty > 0 and self.tol_primal > 0 and self.tol_dual > 0):
            raise InvalidConfigurationError("zeta_scale, penalty and tolerances must be positive")
        if not 0.0 < self.relaxation < 2.0:
            raise InvalidConfigurationError("relaxation must lie in (0, 2)")
        if self.max_iters < 1:
            raise InvalidConfigurationError("max_iters must be >= 1")


@dataclass
class _State:
    z: np.ndarray
    lam: np.ndarray
    rho: float


@dataclass
class AnmSolution:
    h_v: np.ndarray
    spectrum: TwoLevelSpectrum
    nu: float
    objective: float
    iterations: int
    primal_residual: float
    dual_residual: float
    zeta: float = 0.0
    converged: bool = True
    aborted: bool = False
    residual_history: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    state: _State | None = field(default=None, repr=False, compare=False)

    def xi(self) -> np.ndarray:
        """The assembled block matrix ``[[S(U), h], [h^H, nu]]``."""
        return _assemble(toeplitz_embed(self.spectrum, check=False), self.h_v, self.nu)

    def feasibility_margin(self) -> float:
        """``min eig(Xi) + tol * (1 + tr S(U))``; non-negative means feasible."""
        xi = self.xi()
        s_trace = float(np.real(np.trace(xi[:-1, :-1])))
        return float(np.linalg.eigvalsh(xi)[0]) + FEASIBILITY_RTOL * (1.0 + s_trace)


def compute_zeta(noise_std: float, n_prime: int) -> float:
    """Regularization weight ``kappa (1 + 1/log N') sqrt(N' log N' + N' log(4 pi log N'))``."""
    if n_prime < 2:
        raise InvalidConfigurationError(f"N' must be >= 2, got {n_prime}")
    if noise_std < 0:
        raise InvalidConfigurationError("noise_std must be non-negative")
    log_n = np.log(n_prime)
    return float(noise_std * (1.0 + 1.0 / log_n) * np.sqrt(n_prime * log_n + n_prime * np.log(4.0 * np.pi * log_n)))


def _assemble(s: np.ndarray, h: np.ndarray, nu: float) -> np.ndarray:
    n = s.shape[0]
    xi = np.empty((n + 1, n + 1), dtype=complex)
    xi[:n, :n] = s
    xi[:n, n] = h
    xi[n, :n] = h.conj()
    xi[n, n] = nu
    return xi


def _project_psd(x: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(x)
    pos = w > 0
    vp = v[:, pos]
    out = (vp * w[pos]) @ vp.conj().T
    return 0.5 * (out + out.conj().T)


def _admm(
    n_tx: int,
    n_rx: int,
    trace_weight: np.ndarray,
    nu_weight: float,
    config: AnmConfig,
    y: np.ndarray | None = None,
    phi: np.ndarray | None = None,
    fixed_h: np.ndarray | None = None,
    warm: _State | None = None,
):
    """Shared ADMM loop.

    Minimizes ``f(h) + <trace_weight, S(U)> + nu_weight * nu`` over the PSD
    cone, where ``f`` is the least-squares data fit when ``phi`` is given, or
    ``h`` is pinned to ``fixed_h``.
    """
    n = n_tx * n_rx
    mult = lag_multiplicity(n_tx, n_rx)
    if fixed_h is None:
        gram_w, gram_v = np.linalg.eigh(phi.conj().T @ phi)
        phi_y = phi.conj().T @ y
    if warm is None:
        z = np.zeros((n + 1, n + 1), dtype=complex)
        lam = np.zeros_like(z)
        rho = config.penalty
    else:
        z, lam, rho = warm.z.copy(), warm.lam.copy(), warm.rho

    alpha = config.relaxation
    history = np.zeros(config.max_iters)
    h = fixed_h if fixed_h is not None else np.zeros(n, dtype=complex)
    r_norm = s_norm = np.inf
    converged = False
    it = 0
    for it in range(1, config.max_iters + 1):
        if fixed_h is None:
            rhs = gram_v.conj().T @ (phi_y + 2.0 * rho * z[:n, n] - 2.0 * lam[:n, n])
            h = gram_v @ (rhs / (gram_w + 2.0 * rho))
        nu = float(np.real(z[n, n] - (lam[n, n] + nu_weight) / rho))
        target = z[:n, :n] - (trace_weight + lam[:n, :n]) / rho
        u = toeplitz_adjoint(target, n_tx, n_rx).entries / mult
        u = 0.5 * (u + u[::-1, ::-1].conj())
        spectrum = TwoLevelSpectrum(u, n_tx, n_rx)
        xi = _assemble(toeplitz_embed(spectrum, check=False), h, nu)

        z_old = z
        xi_hat = alpha * xi + (1.0 - alpha) * z_old if alpha != 1.0 else xi
        z = _project_psd(xi_hat + lam / rho)
        lam = lam + rho * (xi_hat - z)
        diff = xi - z

        r_norm = float(np.linalg.norm(diff))
        s_norm = float(rho * np.linalg.norm(z - z_old))
        history[it - 1] = r_norm
        if r_norm <= config.tol_primal * max(1.0, np.linalg.norm(xi), np.linalg.norm(z)) and s_norm <= config.tol_dual * max(
            1.0, np.linalg.norm(lam)
        ):
            converged = True
            break
        if config.adaptive_penalty and it % BALANCE_EVERY == 0:
            r_rel = r_norm / max(1e-300, np.linalg.norm(xi), np.linalg.norm(z))
            s_rel = s_norm / max(1e-300, np.linalg.norm(lam))
            if r_rel > 10.0 * s_rel:
                rho *= 2.0
            elif s_rel > 10.0 * r_rel:
                rho /= 2.0

    # Shift S(U) and nu by the most negative eigenvalue so Xi is exactly PSD.
    s = toeplitz_embed(spectrum, check=False)
    min_eig = float(np.linalg.eigvalsh(_assemble(s, h, nu))[0])
    if min_eig < 0:
        u = spectrum.entries.copy()
        u[n_tx - 1, n_rx - 1] += -min_eig
        spectrum = TwoLevelSpectrum(u, n_tx, n_rx)
        nu -= min_eig
    return h, spectrum, nu, it, r_norm, s_norm, converged, history[:it], _State(z, lam, rho)


def _check_finite(*arrays):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise InvalidInputError("inputs contain NaN or Inf")


def _objective(y, phi, h, spectrum, nu, trace_weight, nu_weight) -> float:
    s = toeplitz_embed(spectrum, check=False)
    fit = 0.5 * float(np.linalg.norm(y - phi @ h) ** 2)
    return fit + float(np.real(np.vdot(trace_weight, s))) + nu_weight * nu


def _resolve_zeta(config: AnmConfig, zeta: float | None) -> float:
    if zeta is not None:
        return float(zeta)
    if config.zeta_override is not None:
        return float(config.zeta_override)
    raise InvalidConfigurationError("no regularization weight: pass zeta or set zeta_override")


def solve_anm(
    y: np.ndarray,
    phi: np.ndarray,
    config: AnmConfig | None = None,
    zeta: float | None = None,
    n_tx: int | None = None,
    n_rx: int | None = None,
    _warm: _State | None = None,
) -> AnmSolution:
    """Solve the regularized atomic-norm SDP for one subcarrier.

    ``n_tx``/``n_rx`` default to a square array whose sizes multiply to
    ``phi.shape[1]``.  When ``config.weight`` is set it replaces the identity
    in the trace term.  Hitting ``max_iters`` is not an error; check
    ``converged`` on the result.
    """
    config = config or AnmConfig()
    y = np.asarray(y, dtype=complex).ravel()
    phi = np.asarray(phi, dtype=complex)
    _check_finite(y, phi)
    if phi.ndim != 2 or phi.shape[0] != y.size:
        raise InvalidInputError(f"phi shape {phi.shape} incompatible with y of length {y.size}")
    n = phi.shape[1]
    n_tx, n_rx = _dims(n, n_tx, n_rx)
    zeta = _resolve_zeta(config, zeta)
    if zeta < 0:
        raise InvalidConfigurationError("zeta must be non-negative")

    weight = np.eye(n) if config.weight is None else np.asarray(config.weight)
    trace_weight = zeta / (2.0 * n) * weight
    nu_weight = zeta / 2.0

    # Zero is optimal once the dual certificate ||Phi^H y|| <= zeta / sqrt(n) holds.
    if np.linalg.norm(phi.conj().T @ y) <= zeta / np.sqrt(n) and config.weight is None:
        return AnmSolution(
            np.zeros(n, dtype=complex),
            TwoLevelSpectrum.zeros(n_tx, n_rx),
            0.0,
            0.5 * float(np.linalg.norm(y) ** 2),
            0,
            0.0,
            0.0,
            zeta=zeta,
        )

    h, spectrum, nu, it, r_norm, s_norm, converged, history, state = _admm(
        n_tx, n_rx, trace_weight, nu_weight, config, y=y, phi=phi, warm=_warm
    )
    sol = AnmSolution(
        h,
        spectrum,
        nu,
        _objective(y, phi, h, spectrum, nu, trace_weight, nu_weight),
        it,
        r_norm,
        s_norm,
        zeta=zeta,
        converged=converged,
        residual_history=history,
        state=state,
    )
    return sol


def _dims(n: int, n_tx: int | None, n_rx: int | None) -> tuple[int, int]:
    if n_tx is None and n_rx is None:
        side = int(round(np.sqrt(n)))
        if side * side != n:
            raise InvalidInputError(f"cannot infer array sizes from {n} unknowns; pass n_tx and n_rx")
        return side, side
    if n_tx is None:
        n_tx = n // n_rx
    if n_rx is None:
        n_rx = n // n_tx
    if n_tx * n_rx != n:
        raise InvalidInputError(f"n_tx * n_rx = {n_tx * n_rx} does not match {n} unknowns")
    return n_tx, n_rx


def atomic_norm(h_v: np.ndarray, n_tx: int, n_rx: int, config: AnmConfig | None = None) -> float:
    """Atomic norm of ``h_v`` over the unit-norm atoms ``conj(a_T) kron a_R``.

    Solves ``min 1/2 tr S(U) + nu/2`` s.t. ``Xi`` PSD with ``h`` pinned.  This
    equals ``sqrt(N_t N_r)`` times the value of the ``1/(2 N_t N_r)``
    normalized program, which measures ``h_v`` against atoms with
    unit-modulus entries instead.
    """
    config = config or AnmConfig(tol_primal=1e-8, tol_dual=1e-8, max_iters=5000)
    h_v = np.asarray(h_v, dtype=complex).ravel()
    _check_finite(h_v)
    n = n_tx * n_rx
    if h_v.size != n:
        raise InvalidInputError(f"expected a vector of length {n}, got {h_v.size}")
    if not np.any(h_v):
        return 0.0
    _, spectrum, nu, *_ = _admm(n_tx, n_rx, 0.5 * np.eye(n), 0.5, config, fixed_h=h_v)
    return 0.5 * float(np.real(spectrum(0, 0))) * n + 0.5 * nu


def subcarrier_zeta(measurements: MeasurementSet, n_unknowns: int, config: AnmConfig) -> float:
    if config.zeta_override is not None:
        return float(config.zeta_override)
    kappa = effective_noise_std(measurements.frames, measurements.noise_std)
    return compute_zeta(kappa, n_unknowns) * config.zeta_scale


def estimate_channel(measurements: MeasurementSet, k: int, config: AnmConfig | None = None, n_tx=None, n_rx=None):
    """ANM estimate of ``H[k]`` as an ``N_r x N_t`` matrix."""
    config = config or AnmConfig()
    sol = estimate_subcarrier(measurements, k, config, n_tx, n_rx)
    n_tx, n_rx = sol.spectrum.n_tx, sol.spectrum.n_rx
    return unvectorize(sol.h_v, n_rx, n_tx)


def estimate_subcarrier(measurements: MeasurementSet, k: int, config: AnmConfig, n_tx=None, n_rx=None) -> AnmSolution:
    if not 0 <= k < measurements.n_subcarriers:
        raise IndexError(f"subcarrier {k} outside [0, {measurements.n_subcarriers - 1}]")
    phi = measurements.sensing[k]
    if n_tx is None and measurements.frames:
        n_tx = measurements.frames[0].precoder.shape[0]
        n_rx = measurements.frames[0].combiner.shape[0]
    zeta = subcarrier_zeta(measurements, phi.shape[1], config)
    return solve_anm(measurements.received[k], phi, replace(config, zeta_override=None), zeta=zeta, n_tx=n_tx, n_rx=n_rx)
