"""Positive semi-definite subsampling covariance estimators for high-frequency bipower statistics.

The package covers power, bipower, truncated and pre-averaged bipower
variation, subsampling estimators of their asymptotic covariance, competing
estimators, feasible inference, a Heston simulator and a Monte Carlo harness.
"""
from __future__ import annotations

from .core import PowerSpec, ReturnSeries, TickSeries, gaussian_abs_moment, log_returns, scale_returns
from .errors import *  # noqa: F401,F403
from .kernels import BACKEND
from .variation import (
    EstimateVector,
    TruncationRule,
    bipower_limit,
    bipower_variation,
    constant_integrated_power,
    path_integrated_power,
    power_variation,
    truncated_bipower_variation,
)
from .preavg import (
    WeightConstants,
    WeightScheme,
    iq_hat,
    iv_hat,
    noise_variance_hat,
    preaverage,
    preavg_bipower,
    preavg_bipower_limit,
    weight_constants,
    window_length,
)
from .subsample import (
    CovEstimate,
    SubsampleConfig,
    n_block,
    s_hat_power,
    subsample_cov_bipower,
    subsample_cov_noisy,
    subsample_cov_power,
    subsample_cov_truncated,
    suggest_tuning,
)
from .altvar import (
    ObservedAvarConfig,
    closed_form_sigma,
    observed_avar,
    sigma_tilde,
    sigma_tilde_star_pv,
    sigma_via_rescaled_bipower,
)
from .inference import TestResult, confidence_interval, const_vol_test, jump_test, matrix_diagnostics, studentize
from .simulate import HestonConfig, JumpConfig, NoiseConfig, add_jumps, add_noise, rng_stream, simulate_heston

__version__ = "0.1.0"
