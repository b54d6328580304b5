"""Power, bipower and truncated bipower variation on (noise-free) returns."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .core import PowerSpec, ReturnSeries, _as_return_series, gaussian_abs_moment
from .errors import EmptySeries, InvalidTruncation, SeriesTooShort

__all__ = [
    "EstimateVector",
    "TruncationRule",
    "power_variation",
    "bipower_variation",
    "truncated_bipower_variation",
    "bipower_limit",
    "gamma_terms",
    "constant_integrated_power",
    "path_integrated_power",
]


@dataclass(frozen=True)
class EstimateVector:
    """Point estimates of an m-dimensional bipower-type statistic.

    ``kind`` is one of ``"plain"``, ``"truncated"`` or ``"preaveraged"``;
    ``truncation`` holds ``(alpha, omega_check, threshold)`` and ``preavg``
    holds ``(theta, kn)`` when relevant.
    """

    values: np.ndarray
    spec: Optional[PowerSpec]
    n: int
    kind: str = "plain"
    truncation: Optional[tuple] = None
    preavg: Optional[tuple] = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float, copy=True).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)
        if self.spec is not None and arr.size != self.spec.m:
            raise ValueError("estimate length does not match the power spec")

    def __len__(self):
        return self.values.size

    def __getitem__(self, k):
        return self.values[k]


@dataclass(frozen=True)
class TruncationRule:
    """Jump threshold ``u_n = alpha * n**(-omega_check)``.

    ``alpha`` may be ``math.inf`` to switch truncation off.
    """

    alpha: float
    omega_check: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise InvalidTruncation(f"alpha must be positive, got {self.alpha}")
        if not 0.0 < self.omega_check < 0.5:
            raise InvalidTruncation(f"omega_check must lie in (0, 1/2), got {self.omega_check}")

    def threshold(self, n: int) -> float:
        return self.alpha * float(n) ** (-self.omega_check)

    def admissible(self, beta: float, spec: PowerSpec) -> bool:
        """Check the threshold-rate condition for jump activity ``beta``.

        ``beta`` is an assumption supplied by the caller, not estimated.
        Requires ``beta <= s`` with ``s = 1 ∧ min{q_k, r_k > 0}`` and
        ``omega_check > (s' - 1) / (2 (s' - beta))`` where ``s' = 1 ∨ max{q_k, r_k}``.
        """
        positive = [v for v in spec.q + spec.r if v > 0]
        s = min([1.0] + positive)
        s_prime = max([1.0] + list(spec.q + spec.r))
        if beta > s:
            return False
        if s_prime == 1.0:
            return True
        return self.omega_check > (s_prime - 1.0) / (2.0 * (s_prime - beta))


def gamma_terms(x: np.ndarray, spec, lag: int = 1) -> np.ndarray:
    """Per-index summands ``f_k(x_j) g_k(x_{j+lag})`` as an ``(m, len(x) - lag)`` array.

    ``spec`` is a :class:`PowerSpec` or a pair ``(f, g)`` of callables mapping a
    1-D array to an ``(m, len)`` (or ``(len,)``) array.
    """
    if isinstance(spec, PowerSpec):
        return kernels.power_products(x, lag, spec.q_array, spec.r_array)
    f, g = spec
    size = x.size - lag
    fa = np.atleast_2d(np.asarray(f(x[:size]), dtype=float))
    ga = np.atleast_2d(np.asarray(g(x[lag:lag + size]), dtype=float))
    return fa * ga


def _function_terms(x: np.ndarray, f) -> np.ndarray:
    if isinstance(f, PowerSpec):
        zeros = np.zeros(f.m)
        return kernels.power_products(x, 0, f.q_array, zeros)
    return np.atleast_2d(np.asarray(f(x), dtype=float))


def power_variation(returns, f) -> EstimateVector:
    """``V(f)^n = (1/n) sum_{i=1}^n f(sqrt(n) Δ_i)``.

    ``f`` is either a :class:`PowerSpec` (only ``q`` is used, ``f_k = |x|**q_k``)
    or a callable returning an ``(m, n)`` array.
    """
    returns = _as_return_series(returns)
    n = returns.n
    if n < 1:
        raise EmptySeries("power variation needs at least one return")
    x = math.sqrt(n) * returns.values
    terms = _function_terms(x, f)
    spec = f if isinstance(f, PowerSpec) else None
    if spec is not None and not spec.is_power_only:
        spec = PowerSpec(spec.q, [0.0] * spec.m)
    return EstimateVector(terms.sum(axis=1) / n, spec, n)


def bipower_variation(returns, spec) -> EstimateVector:
    """``V(q,r)^n = (1/n) sum_{i=1}^{n-1} |sqrt(n) Δ_i|^q |sqrt(n) Δ_{i+1}|^r``.

    ``spec`` may also be a pair of callables ``(f, g)`` for the general form.
    """
    returns = _as_return_series(returns)
    n = returns.n
    if n < 2:
        raise SeriesTooShort("bipower variation needs at least two returns")
    x = math.sqrt(n) * returns.values
    terms = gamma_terms(x, spec, 1)
    return EstimateVector(terms.sum(axis=1) / n, spec if isinstance(spec, PowerSpec) else None, n)


def truncate(values: np.ndarray, threshold: float) -> np.ndarray:
    """Zero every increment whose absolute value exceeds ``threshold`` (ties are kept)."""
    return np.where(np.abs(values) <= threshold, values, 0.0)


def truncated_bipower_variation(returns, spec: PowerSpec, rule: TruncationRule) -> EstimateVector:
    returns = _as_return_series(returns)
    n = returns.n
    if n < 2:
        raise SeriesTooShort("bipower variation needs at least two returns")
    u = rule.threshold(n)
    est = bipower_variation(ReturnSeries(truncate(returns.values, u)), spec)
    return EstimateVector(
        est.values, spec, n, kind="truncated", truncation=(rule.alpha, rule.omega_check, u)
    )


def bipower_limit(spec: PowerSpec, integrated_power: Callable[[float], float]) -> np.ndarray:
    """Probability limit ``mu_q mu_r ∫|σ|^(q+r)`` for each component of ``spec``."""
    return np.array(
        [
            gaussian_abs_moment(q) * gaussian_abs_moment(r) * float(integrated_power(q + r))
            for q, r in zip(spec.q, spec.r)
        ]
    )


def constant_integrated_power(sigma: float) -> Callable[[float], float]:
    """``p -> |sigma|**p`` (integral over the unit interval of a constant volatility)."""
    s = abs(float(sigma))
    return lambda p: 1.0 if p == 0 else s ** p


def path_integrated_power(variance_path) -> Callable[[float], float]:
    """Left Riemann sum of ``|σ_s|^p`` from spot variances on the grid ``i/n, i = 0..n``.

    The last grid point is dropped so the sum matches ``n`` increments.
    """
    v = np.asarray(variance_path, dtype=float)
    v = np.maximum(v[:-1] if v.size > 1 else v, 0.0)
    return lambda p: 1.0 if p == 0 else float(np.mean(v ** (0.5 * p)))
