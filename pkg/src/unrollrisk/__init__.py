"""Exact risks, expressivity, and training of unrolled vs. bilevel learned denoisers.

The package studies a fully tractable denoising model: signals are random
constant vectors or iid vectors, noise is additive Gaussian, and the
denoiser is either the exact solution operator of a quadratic variational
problem (bilevel learning) or N steps of gradient descent on it
(algorithm unrolling). Every true risk, best estimator, and optimal
stepsize has a closed form, implemented here alongside Monte Carlo and
numeric-minimization oracles, spectral membership tests, and a small
training harness with learned stepsizes.
"""

from .estimators import (LinearEstimator, Regularizer, UnrollConfig, bilevel_estimator,
                         softplus, solve_lower_level, unroll_estimator, unroll_gd_iterative)
from .experiment import (DEFAULT_OMEGA, FrameDataset, TrainConfig, TrainResult,
                         stats_loss_and_grads,
                         depth_sweep_csv, ingest_frames, sweep_depth, synthetic_frames,
                         theory_depth_curve, train, unrolled_loss_and_grads)
from .expressivity import (CnBounds, MembershipVerdict, SpectralDecomposition, c_constant,
                           hn_bounds, membership_bilevel, membership_unrolling, rho,
                           sym_eig, transfer_f)
from .model import (KIND_CONST, KIND_IID, ModelParams, SampleBatch, make_rng,
                    sample_batch, spawn_rngs)
from .optimal import (OptimalOmegaReport, OptimalRiskReport, best_linear, bilevel_optimal,
                      frame_aligned_with_ones, grid_local_minima, lp_vertex_min,
                      optimal_omega, scalar_landscape, shrinkage_constants,
                      unrolling_optimal)
from .oracles import (bilevel_risk_value_grad, minimize_risk_over_regularizer,
                      risk_of_regularizer, unroll_risk_value_grad)
from .risk import McEstimate, RiskValue, data_term, mc_risk, noise_term, risk_ratio, true_risk
from .sweep import SweepSpec, rows_to_csv, rows_to_json, run_sweep
from .verify import run_suite

__version__ = "0.1.0"

__all__ = [
    "KIND_CONST", "KIND_IID", "ModelParams", "SampleBatch", "make_rng", "sample_batch",
    "spawn_rngs",
    "Regularizer", "UnrollConfig", "LinearEstimator", "softplus", "solve_lower_level",
    "unroll_gd_iterative", "unroll_estimator", "bilevel_estimator",
    "RiskValue", "McEstimate", "true_risk", "noise_term", "data_term", "mc_risk",
    "risk_ratio",
    "transfer_f", "rho", "hn_bounds", "c_constant", "CnBounds", "sym_eig",
    "SpectralDecomposition", "MembershipVerdict", "membership_bilevel",
    "membership_unrolling",
    "OptimalRiskReport", "OptimalOmegaReport", "best_linear", "bilevel_optimal",
    "unrolling_optimal", "optimal_omega", "lp_vertex_min", "scalar_landscape",
    "grid_local_minima", "shrinkage_constants", "frame_aligned_with_ones",
    "risk_of_regularizer", "unroll_risk_value_grad", "bilevel_risk_value_grad",
    "minimize_risk_over_regularizer",
    "TrainConfig", "FrameDataset", "TrainResult", "train", "sweep_depth",
    "synthetic_frames", "ingest_frames", "unrolled_loss_and_grads", "depth_sweep_csv",
    "theory_depth_curve", "DEFAULT_OMEGA",
    "SweepSpec", "run_sweep", "rows_to_csv", "rows_to_json", "run_suite",
]
