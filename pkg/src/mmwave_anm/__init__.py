"""Gridless channel estimation for frequency-selective mmWave MIMO-OFDM links.

Per-subcarrier atomic-norm (ANM) and reweighted atomic-norm (RAM) estimators
solved by ADMM on a two-level Toeplitz SDP, an on-grid OMP baseline, and a
Monte-Carlo NMSE harness.
"""
from .anm import AnmConfig, AnmSolution, atomic_norm, compute_zeta, estimate_channel, solve_anm
from .channel import (
    ArrayGeometry,
    ChannelPath,
    ChannelRealization,
    FrequencyChannel,
    PulseShape,
    delay_tap,
    frequency_channel,
    random_realization,
    raised_cosine,
    rho,
    steering_vector,
    unvectorize,
    vectorize_channel,
)
from .harness import ExperimentConfig, SweepResult, TrialResult, emit_results, nmse, run_trial, sweep_frames, sweep_snr
from .omp import AngularDictionary, build_dictionary, omp_estimate
from .ram import RamConfig, reweight_matrix, solve_ram
from .sounding import (
    MeasurementSet,
    PhaseCodebook,
    TrainingFrame,
    build_phi,
    effective_noise_std,
    gen_frames,
    receive,
)
from .toeplitz import Atom, TwoLevelSpectrum, atom, psd_project, toeplitz_adjoint, toeplitz_embed

__version__ = "0.1.0"
