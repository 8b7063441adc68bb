"""Stochastic conjugate gradient with minimum-variance control-variate gradients."""
from .data import Dataset, dump_libsvm, load_libsvm, maxmin_scale, parse_libsvm, synth_ridge
from .harness import (
    VarianceExperimentConfig,
    compare_convergence,
    runtime_ratio,
    standard_variants,
    synth_suite,
    variance_experiment,
)
from .linesearch import WolfeParams, beta_prp_fr, strong_wolfe, update_direction
from .model import FiniteSumObjective, RidgeObjective
from .optimize import DivergedError, RunConfig, RunTrace, cg_minimize, run, run_alg1, run_alg2
from .preprocessing import MaxMinScaler
from .regressor import SGMVRegressor
from .sgmv import (
    BatchGradients,
    GammaEstimate,
    estimate_gamma,
    gamma_star,
    mc_variance_check,
    sample_stats,
    sgmv_estimate,
)
from .svg import emit_svg_lines

__version__ = "0.1.0"
