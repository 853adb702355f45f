"""Monte-Carlo NMSE experiments: trials, SNR / frame sweeps and result files."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import ram
from .anm import AnmConfig, estimate_subcarrier
from .channel import DEFAULT_SYMBOL_PERIOD, FrequencyChannel, PulseShape, frequency_channel, random_realization
from .errors import InvalidConfigurationError, UndefinedMetricError
from .omp import build_dictionary, omp_estimate
from .sounding import PhaseCodebook, gen_frames, receive

log = logging.getLogger(__name__)

ESTIMATORS = ("anm", "ram", "omp")
NMSE_FLOOR_DB = -120.0
NOISELESS_ZETA = 1e-6
# noiseless runs are judged on exact recovery, so the solver tolerance is capped
NOISELESS_TOL = 1e-5
WORKERS_ENV = "MMWAVE_ANM_WORKERS"
CSV_HEADER = ("estimator", "snr_db", "frames", "trial", "seed", "nmse_db", "iterations", "runtime_ms")


@dataclass(frozen=True)
class ExperimentConfig:
    n_tx: int = 8
    n_rx: int = 8
    n_rf: int = 2
    n_subcarriers: int = 8
    n_taps: int = 4
    n_paths: int = 2
    symbol_period: float = DEFAULT_SYMBOL_PERIOD
    rolloff: float = 0.8
    bits: int = 7
    frames: int = 32
    frames_list: tuple = (16, 32, 48)
    power: float = 1.0
    snr_list: tuple = (0.0, 10.0, 20.0)
    frames_snr_db: float = 10.0
    estimators: tuple = ESTIMATORS
    trials: int = 20
    base_seed: int = 0
    grid: int = 32
    omp_max_atoms: int | None = None
    omp_residual_tol: float = 1e-3
    ram_iters: int = 5
    epsilon_scale: float = 1.0
    zeta_scale: float = 0.4
    zeta_override: float | None = None
    max_iters: int = 2000
    penalty: float = 0.05
    tol_primal: float = 1e-3
    tol_dual: float = 1e-3
    noiseless: bool = False
    full_sounding: bool = False
    out: str = "results/sweep"

    def __post_init__(self):
        object.__setattr__(self, "snr_list", tuple(float(s) for s in self.snr_list))
        object.__setattr__(self, "frames_list", tuple(int(m) for m in self.frames_list))
        object.__setattr__(self, "estimators", tuple(self.estimators))
        if self.trials < 1:
            raise InvalidConfigurationError("trials must be >= 1")
        if not self.snr_list:
            raise InvalidConfigurationError("snr_list must be nonempty")
        if not self.estimators:
            raise InvalidConfigurationError("estimators must be nonempty")
        unknown = set(self.estimators) - set(ESTIMATORS)
        if unknown:
            raise InvalidConfigurationError(f"unknown estimators {sorted(unknown)}; choose from {ESTIMATORS}")
        if self.n_rf > min(self.n_tx, self.n_rx):
            raise InvalidConfigurationError("n_rf must not exceed min(n_tx, n_rx)")

    def anm_config(self) -> AnmConfig:
        zeta = self.zeta_override
        tol_p, tol_d = self.tol_primal, self.tol_dual
        if self.noiseless:
            zeta = NOISELESS_ZETA if zeta is None else zeta
            tol_p, tol_d = min(tol_p, NOISELESS_TOL), min(tol_d, NOISELESS_TOL)
        return AnmConfig(
            zeta_override=zeta,
            zeta_scale=self.zeta_scale,
            max_iters=self.max_iters,
            penalty=self.penalty,
            tol_primal=tol_p,
            tol_dual=tol_d,
        )

    def ram_config(self) -> ram.RamConfig:
        return ram.RamConfig(iterations=self.ram_iters, epsilon_scale=self.epsilon_scale, inner=self.anm_config())

    def sounding_frames(self, frames: int) -> int:
        if self.full_sounding:
            return math.ceil(self.n_tx * self.n_rx / self.n_rf)
        return frames

    def snapshot(self) -> dict:
        return asdict(self)


PRESETS = {
    "desk": {},
    "paper": dict(
        n_tx=16,
        n_rx=16,
        n_subcarriers=32,
        n_paths=3,
        frames=60,
        frames_list=(20, 40, 60, 80),
        grid=64,
        snr_list=(-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0),
    ),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise InvalidConfigurationError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


@dataclass(frozen=True)
class TrialResult:
    estimator: str
    snr_db: float
    frames: int
    trial: int
    seed: int
    nmse_db: float
    iterations: int
    runtime_ms: float
    failed: bool = False
    error: str = ""
    # smallest Xi feasibility margin over subcarriers (ANM / RAM only); not part of the CSV
    feasibility: float = float("nan")

    def sort_key(self):
        return (ESTIMATORS.index(self.estimator), self.snr_db, self.frames, self.trial)


@dataclass
class SweepResult:
    config: dict
    rows: list
    aggregates: list = field(default_factory=list)
    kind: str = "snr"


def nmse(estimates, truth: FrequencyChannel) -> float:
    """NMSE in dB over all subcarriers, floored at -120 dB."""
    est = np.asarray(estimates, dtype=complex)
    ref = truth.per_subcarrier
    if est.shape != ref.shape:
        raise InvalidConfigurationError(f"estimate shape {est.shape} does not match channel shape {ref.shape}")
    den = float(np.sum(np.abs(ref) ** 2))
    if den == 0.0:
        raise UndefinedMetricError("NMSE is undefined for an all-zero channel")
    num = float(np.sum(np.abs(est - ref) ** 2))
    if num == 0.0:
        return NMSE_FLOOR_DB
    return max(NMSE_FLOOR_DB, 10.0 * math.log10(num / den))


def _snr_key(snr_db: float) -> int:
    if math.isinf(snr_db):
        return 2**31
    return int(round(snr_db * 1000)) + 2**30


def derive_seed(base_seed: int, *key: int) -> int:
    """63-bit seed hashed from ``base_seed`` and a tuple of non-negative ints."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=tuple(int(k) for k in key))
    hi, lo = ss.generate_state(2, dtype=np.uint32)
    return int((int(hi) << 32 | int(lo)) & (2**63 - 1))


def trial_seed(config: ExperimentConfig, estimator: str, snr_db: float, frames: int, trial: int) -> int:
    return derive_seed(config.base_seed, 0, ESTIMATORS.index(estimator), _snr_key(snr_db), frames, trial)


@dataclass
class Scenario:
    truth: FrequencyChannel
    measurements: object


def build_scenario(config: ExperimentConfig, snr_db: float, frames: int, trial: int) -> Scenario:
    """Channel, frames and measurements for one trial.

    All estimators, SNR points and frame counts of a trial share one channel,
    one frame stream (prefix by ``frames``) and one unit-variance noise draw
    scaled to the SNR, so comparisons between them are paired.
    """
    pulse = PulseShape(config.symbol_period, config.rolloff)
    realization = random_realization(
        config.n_paths,
        config.n_tx,
        config.n_rx,
        config.n_taps,
        config.n_subcarriers,
        pulse,
        seed=derive_seed(config.base_seed, 1, trial),
    )
    truth = frequency_channel(realization)
    m = config.sounding_frames(frames)
    training = gen_frames(
        m,
        config.n_tx,
        config.n_rx,
        config.n_rf,
        config.n_subcarriers,
        PhaseCodebook(config.bits),
        config.power,
        seed=derive_seed(config.base_seed, 2, trial),
    )
    noise_std = 0.0 if config.noiseless else None
    measurements = receive(
        truth, training, snr_db, config.power, seed=derive_seed(config.base_seed, 3, trial), noise_std=noise_std
    )
    return Scenario(truth, measurements)


@lru_cache(maxsize=8)
def _dictionary(grid: int, n_tx: int, n_rx: int):
    return build_dictionary(grid, n_tx, n_rx)


def run_estimator(config: ExperimentConfig, scenario: Scenario, estimator: str):
    """Estimate every subcarrier.

    Returns ``(K, N_r, N_t)`` estimates, the iteration count and the smallest
    feasibility margin of the SDP solutions (nan for OMP).
    """
    ms = scenario.measurements
    K = ms.n_subcarriers
    n_tx, n_rx = config.n_tx, config.n_rx
    out = np.zeros((K, n_rx, n_tx), dtype=complex)
    iterations = 0
    margin = math.inf if estimator in ("anm", "ram") else float("nan")
    for k in range(K):
        if estimator == "anm":
            sol = estimate_subcarrier(ms, k, config.anm_config(), n_tx, n_rx)
            h, iterations = sol.h_v, iterations + sol.iterations
            margin = min(margin, sol.feasibility_margin())
        elif estimator == "ram":
            sol = ram.estimate_subcarrier(ms, k, config.ram_config(), n_tx, n_rx)
            h, iterations = sol.h_v, iterations + sol.iterations
            margin = min(margin, sol.feasibility_margin())
        elif estimator == "omp":
            max_atoms = config.omp_max_atoms or 2 * max(config.n_paths, 1)
            dictionary = _dictionary(config.grid, n_tx, n_rx)
            h = omp_estimate(ms.received[k], ms.sensing[k], dictionary, max_atoms, config.omp_residual_tol)
            iterations += 1
        else:
            raise InvalidConfigurationError(f"unknown estimator {estimator!r}")
        out[k] = h.reshape((n_rx, n_tx), order="F")
    return out, iterations, margin


def run_trial(config: ExperimentConfig, snr_db: float, frames: int, estimator: str, trial_index: int) -> TrialResult:
    """One Monte-Carlo trial.  Estimator failures come back as flagged rows."""
    seed = trial_seed(config, estimator, snr_db, frames, trial_index)
    start = time.perf_counter()
    try:
        scenario = build_scenario(config, snr_db, frames, trial_index)
        estimates, iterations, margin = run_estimator(config, scenario, estimator)
        value = nmse(estimates, scenario.truth)
    except Exception as exc:  # noqa: BLE001 - recorded in the row
        log.warning("trial failed: %s snr=%s M=%s trial=%s: %s", estimator, snr_db, frames, trial_index, exc)
        elapsed = (time.perf_counter() - start) * 1e3
        return TrialResult(estimator, snr_db, frames, trial_index, seed, float("nan"), 0, elapsed, True, repr(exc))
    elapsed = (time.perf_counter() - start) * 1e3
    return TrialResult(estimator, float(snr_db), int(frames), trial_index, seed, value, iterations, elapsed, feasibility=margin)


def _run_job(args):
    return run_trial(*args)


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise InvalidConfigurationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc


def _run_jobs(jobs, workers: int | None = None) -> list:
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) <= 1:
        rows = [_run_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_run_job, jobs, chunksize=1))
    return sorted(rows, key=TrialResult.sort_key)


def aggregate(rows) -> list:
    """Mean and standard error of ``nmse_db`` per (estimator, snr, frames); failed rows excluded."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.estimator, row.snr_db, row.frames), []).append(row)
    out = []
    for (est, snr, frames), group in sorted(groups.items(), key=lambda kv: (ESTIMATORS.index(kv[0][0]), kv[0][1], kv[0][2])):
        ok = np.array([r.nmse_db for r in group if not r.failed])
        n = ok.size
        mean = float(ok.mean()) if n else float("nan")
        stderr = float(ok.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out.append(
            dict(
                estimator=est,
                snr_db=snr,
                frames=frames,
                mean_nmse_db=mean,
                stderr_nmse_db=stderr,
                trials=n,
                failures=len(group) - n,
            )
        )
    return out


def sweep_snr(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    jobs = [
        (config, snr, config.frames, est, t)
        for est in config.estimators
        for snr in config.snr_list
        for t in range(config.trials)
    ]
    rows = _run_jobs(jobs, workers)
    return SweepResult(config.snapshot(), rows, aggregate(rows), kind="snr")


def sweep_frames(config: ExperimentConfig, workers: int | None = None) -> SweepResult:
    frames_list = config.frames_list or (config.frames,)
    jobs = [
        (config, config.frames_snr_db, m, est, t)
        for est in config.estimators
        for m in frames_list
        for t in range(config.trials)
    ]
    rows = _run_jobs(jobs, workers)
    return SweepResult(config.snapshot(), rows, aggregate(rows), kind="frames")


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def render_csv(result: SweepResult, timing: bool = True) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in sorted(result.rows, key=TrialResult.sort_key):
        runtime = f"{r.runtime_ms:.3f}" if timing else "nan"
        writer.writerow([r.estimator, _fmt(r.snr_db), r.frames, r.trial, r.seed, _fmt(r.nmse_db), r.iterations, runtime])
    return buf.getvalue()


def render_json(result: SweepResult) -> str:
    failures = [
        dict(estimator=r.estimator, snr_db=r.snr_db, frames=r.frames, trial=r.trial, error=r.error)
        for r in sorted(result.rows, key=TrialResult.sort_key)
        if r.failed
    ]
    doc = dict(kind=result.kind, config=result.config, aggregates=result.aggregates, failures=failures)
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"


def emit_results(result: SweepResult, path, timing: bool = True) -> tuple[Path, Path]:
    """Write ``<path>.csv`` and ``<path>.json``.

    With ``timing=False`` the ``runtime_ms`` column is written as ``nan`` so
    that repeated sweeps produce byte-identical files.
    """
    base = Path(path)
    if base.suffix in (".csv", ".json"):
        base = base.with_suffix("")
    csv_path, json_path = base.with_suffix(".csv"), base.with_suffix(".json")
    try:
        base.parent.mkdir(parents=True, exist_ok=True)
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_csv(result, timing))
        with open(json_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(render_json(result))
    except OSError as exc:
        raise OSError(f"cannot write results to {base}: {exc}") from exc
    return csv_path, json_path


def config_fields() -> dict:
    return {f.name: f for f in fields(ExperimentConfig)}


def with_overrides(config: ExperimentConfig, **overrides) -> ExperimentConfig:
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
