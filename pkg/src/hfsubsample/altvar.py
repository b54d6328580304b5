"""Competing covariance estimators and the closed-form covariance for pure bipower statistics.

None of the data-driven estimators here is positive semi-definite by
construction; they serve as benchmarks for the subsamplers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import PowerSpec, _as_return_series, _as_tick_series, gaussian_abs_moment
from .errors import InsufficientData, InvalidConfig, NonPurePowers, SeriesTooShort, WindowTooLarge
from .preavg import WeightScheme, preavg_products
from .subsample import CovEstimate, cov_estimate
from .variation import bipower_variation, constant_integrated_power, gamma_terms

__all__ = [
    "ObservedAvarConfig",
    "sigma_tilde",
    "sigma_via_rescaled_bipower",
    "sigma_tilde_star_pv",
    "observed_avar",
    "closed_form_sigma",
    "sigma_constants",
]


def _require_pure(spec):
    if not isinstance(spec, PowerSpec):
        raise NonPurePowers("this estimator needs a PowerSpec of pure absolute powers")
    return spec


def sigma_constants(spec: PowerSpec) -> np.ndarray:
    """Moment combination multiplying ``∫|σ|^(q_i+q_j+r_i+r_j)`` in the limiting covariance."""
    spec = _require_pure(spec)
    mu = gaussian_abs_moment
    m = spec.m
    out = np.empty((m, m))
    for i in range(m):
        qi, ri = spec.q[i], spec.r[i]
        for j in range(i, m):
            qj, rj = spec.q[j], spec.r[j]
            out[i, j] = out[j, i] = (
                mu(qi + qj) * mu(ri + rj)
                + mu(qi) * mu(rj) * mu(qj + ri)
                + mu(qj) * mu(ri) * mu(qi + rj)
                - 3.0 * mu(qi) * mu(qj) * mu(ri) * mu(rj)
            )
    return out


def closed_form_sigma(spec: PowerSpec, integrated_power) -> np.ndarray:
    """Limiting covariance of ``sqrt(n) (V(q,r)^n - V(q,r))`` without noise.

    ``integrated_power`` maps ``p`` to ``∫|σ_s|^p ds``; a number is read as a
    constant volatility.
    """
    spec = _require_pure(spec)
    if not callable(integrated_power):
        integrated_power = constant_integrated_power(integrated_power)
    c = sigma_constants(spec)
    q, r = spec.q_array, spec.r_array
    powers = q[:, None] + q[None, :] + r[:, None] + r[None, :]
    ip = np.vectorize(lambda p: float(integrated_power(float(p))))(powers)
    return c * ip


def sigma_tilde(returns, spec) -> CovEstimate:
    """Estimator built from asymptotically 1-dependent products of adjacent summands.

    Entry ``(i, j)`` is ``(1/n) sum_{l=2}^{n-3} [γ_l(i) (γ_{l-1} + γ_l + γ_{l+1})(j) - 3 γ_l(i) γ_{l+2}(j)]``
    with ``γ_l(k) = f_k(sqrt(n) Δ_l) g_k(sqrt(n) Δ_{l+1})``. The output is symmetrized.
    """
    returns = _as_return_series(returns)
    n = returns.n
    if n < 6:
        raise SeriesTooShort("need at least six returns")
    g = gamma_terms(math.sqrt(n) * returns.values, spec, 1)
    k = g.shape[1]
    centre = g[:, 1 : k - 2]
    near = g[:, 0 : k - 3] + centre + g[:, 2 : k - 1] - 3.0 * g[:, 3:k]
    raw = centre @ near.T / n
    return cov_estimate(raw, "sigma_tilde")


def sigma_via_rescaled_bipower(returns, spec: PowerSpec) -> CovEstimate:
    """Plug-in estimator ``c_ij V(q_i + q_j, r_i + r_j)^n``."""
    spec = _require_pure(spec)
    returns = _as_return_series(returns)
    c = sigma_constants(spec)
    q, r = spec.q_array, spec.r_array
    qq = (q[:, None] + q[None, :]).ravel()
    rr = (r[:, None] + r[None, :]).ravel()
    v = bipower_variation(returns, PowerSpec(qq, rr)).values.reshape(spec.m, spec.m)
    mu = gaussian_abs_moment
    norm = np.array([[mu(a) * mu(b) for a, b in zip(qrow, rrow)]
                     for qrow, rrow in zip(q[:, None] + q[None, :], r[:, None] + r[None, :])])
    return cov_estimate(c / norm * v, "rescaled_bipower")


def sigma_tilde_star_pv(prices, spec: PowerSpec, scheme: WeightScheme) -> CovEstimate:
    """Kernel-type estimator of the pre-averaged covariance from lagged cross products.

    With ``Y_m = n^(-1/2) |n^(1/4) ΔȲ_m|^q |n^(1/4) ΔȲ_{m+kn}|^r`` it returns
    ``(2/sqrt(n)) sum_m sum_{l=0}^{2kn-1} sym[Y_m (Y_{m+l} - Y_{m+2kn})]``; ``m``
    runs over every start index for which ``m + 2kn`` is available.
    """
    prices = _as_tick_series(prices)
    n = prices.n
    kn = scheme.kn
    if n < 4 * kn:
        raise WindowTooLarge(f"need n >= 4 kn, got n={n}, kn={kn}")
    y = preavg_products(prices, spec, scheme) / math.sqrt(n)
    total = y.shape[1]
    span = 2 * kn
    count = total - span
    csum = np.concatenate([np.zeros((y.shape[0], 1)), np.cumsum(y, axis=1)], axis=1)
    window = csum[:, span : span + count] - csum[:, :count]
    lead = y[:, :count]
    inner = window - span * y[:, span : span + count]
    a = lead @ inner.T
    raw = (2.0 / math.sqrt(n)) * a
    est = cov_estimate(raw, "sigma_tilde_star_pv")
    return est


@dataclass(frozen=True)
class ObservedAvarConfig:
    """Block count ``B`` and the two scales ``K1 < K2`` of the observed asymptotic variance."""

    B: int = 15
    K1: int = 1
    K2: int = 2
    edge_mode: str = "forward"

    def __post_init__(self):
        if self.B < 2:
            raise InvalidConfig("B must be at least 2")
        if not 1 <= self.K1 < self.K2:
            raise InvalidConfig("need 1 <= K1 < K2")
        if self.edge_mode not in ("forward", "centered"):
            raise InvalidConfig("edge_mode must be 'forward' or 'centered'")
        if 2 * self.K2 > self.B:
            raise InvalidConfig("B must hold 2*K2 blocks")


def _apparent_qv(theta: np.ndarray, K: int, forward: bool) -> np.ndarray:
    # theta: (m, B) per-block contributions summing to the statistic
    B = theta.shape[1]
    c = np.concatenate([np.zeros((theta.shape[0], 1)), np.cumsum(theta, axis=1)], axis=1)
    if forward:
        # compare the K blocks after a split point with the K blocks before it
        idx = np.arange(K, B - K + 1)
        d = (c[:, idx + K] - c[:, idx]) - (c[:, idx] - c[:, idx - K])
    else:
        idx = np.arange(0, B - 2 * K + 1)
        d = (c[:, idx + 2 * K] - c[:, idx + K]) - (c[:, idx + K] - c[:, idx])
    return B / (2.0 * K) * (d @ d.T) / d.shape[1]


def observed_avar(data, spec, cfg: ObservedAvarConfig = ObservedAvarConfig(), scheme: WeightScheme = None) -> CovEstimate:
    """Two-scale observed asymptotic variance from adjacent local estimates.

    The summands of the statistic are cut into ``B`` contiguous blocks whose
    contributions add up to the full estimate. For scale ``K`` the apparent
    quadratic covariation compares sums over ``K`` blocks on either side of each
    split point; the scales ``K1`` and ``K2`` are combined so that a smooth drift
    in the local estimates cancels. ``data`` are prices when ``scheme`` is given
    (pre-averaged statistic, rate ``n^(1/4)``) and returns otherwise (rate ``n^(1/2)``).
    """
    if scheme is not None:
        prices = _as_tick_series(data)
        n = prices.n
        terms = preavg_products(prices, spec, scheme)
        norm = terms.shape[1]
        rate2 = math.sqrt(n)
    else:
        returns = _as_return_series(data)
        n = returns.n
        if n < 2:
            raise SeriesTooShort("need at least two returns")
        terms = gamma_terms(math.sqrt(n) * returns.values, spec, 1)
        norm = n
        rate2 = float(n)
    total = terms.shape[1]
    if total < cfg.B:
        raise InsufficientData(f"{total} summands cannot fill B={cfg.B} blocks")
    edges = np.linspace(0, total, cfg.B + 1).round().astype(int)
    csum = np.concatenate([np.zeros((terms.shape[0], 1)), np.cumsum(terms, axis=1)], axis=1)
    theta = (csum[:, edges[1:]] - csum[:, edges[:-1]]) / norm
    forward = cfg.edge_mode == "forward"
    qv1 = _apparent_qv(theta, cfg.K1, forward)
    qv2 = _apparent_qv(theta, cfg.K2, forward)
    k1, k2 = cfg.K1 ** 3, cfg.K2 ** 3
    combo = (k2 * qv1 - k1 * qv2) / (k2 - k1)
    return cov_estimate(rate2 * combo, "observed_avar", qv_K1=rate2 * qv1, qv_K2=rate2 * qv2)
