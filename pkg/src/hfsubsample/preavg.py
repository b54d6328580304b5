"""Pre-averaging of noisy log-prices and the estimators built on it.

Indexing convention: with ``n + 1`` prices ``Y_0..Y_n`` and window ``kn``, the
pre-averaged return starting at price ``i`` is

    ΔȲ_i = sum_{j=1}^{kn} w(j/kn) (Y_{i+j} - Y_{i+j-1}),   i = 0..n-kn,

so the full sample has ``n - kn + 1`` of them, each built from prices
``i..i+kn`` only.
"""
from __future__ import annotations

import math
import threading
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import integrate

from . import kernels
from .core import PowerSpec, TickSeries, _as_return_series, _as_tick_series, gaussian_abs_moment
from .errors import DomainError, InvalidConfig, QuadratureFailure, SeriesTooShort, WindowTooLarge
from .variation import EstimateVector

__all__ = [
    "weight_min_x",
    "WeightScheme",
    "WeightConstants",
    "PreAveragedSeries",
    "NoiseVarianceEstimate",
    "weight_constants",
    "preaverage",
    "preavg_bipower",
    "preavg_products",
    "preaverage_levels",
    "noise_variance_hat",
    "iv_hat",
    "iq_hat",
    "sigma_star_20_closed_form",
    "preavg_bipower_limit",
    "window_length",
]

# Known to hold only under i.i.d. noise; autocorrelated noise biases the correction.
IID_NOISE_ONLY = True


def weight_min_x(x: float) -> float:
    """The triangular weight ``min(x, 1 - x)`` on ``[0, 1]``."""
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"weight is defined on [0, 1], got {x}")
    return min(x, 1.0 - x)


def _min_x_derivative(x: float) -> float:
    return 1.0 if x < 0.5 else -1.0


def _vectorized(w: Callable[[float], float]) -> Callable[[np.ndarray], np.ndarray]:
    if w is weight_min_x:
        return lambda x: np.minimum(x, 1.0 - x)
    return np.vectorize(w, otypes=[float])


def window_length(theta: float, n: int, rounding: str = "nearest") -> int:
    """``kn = max(2, [theta * sqrt(n)])`` with nearest-integer or floor rounding."""
    raw = theta * math.sqrt(n)
    if rounding == "nearest":
        kn = int(math.floor(raw + 0.5))
    elif rounding == "floor":
        kn = int(math.floor(raw))
    else:
        raise InvalidConfig(f"unknown rounding mode {rounding!r}")
    return max(2, kn)


@dataclass(frozen=True)
class WeightScheme:
    """Pre-averaging window ``kn`` with tuning constant ``theta`` and weight ``w``.

    ``dw`` is the (piecewise) derivative of ``w`` and ``breakpoints`` lists the
    interior kinks, both used only by the quadrature for the limit constants.
    """

    kn: int
    theta: float
    w: Callable[[float], float] = weight_min_x
    dw: Optional[Callable[[float], float]] = None
    breakpoints: tuple = (0.5,)

    def __post_init__(self):
        if int(self.kn) != self.kn or self.kn < 2:
            raise InvalidConfig("the pre-averaging window needs kn >= 2")
        if not self.theta > 0:
            raise InvalidConfig("theta must be positive")
        object.__setattr__(self, "kn", int(self.kn))
        if self.dw is None and self.w is weight_min_x:
            object.__setattr__(self, "dw", _min_x_derivative)
        if abs(self.w(0.0)) > 1e-14 or abs(self.w(1.0)) > 1e-14:
            raise InvalidConfig("weight must vanish at 0 and 1")

    @classmethod
    def from_theta(cls, theta: float, n: int, rounding: str = "nearest", **kwargs) -> "WeightScheme":
        return cls(window_length(theta, n, rounding), theta, **kwargs)

    @property
    def weights(self) -> np.ndarray:
        """``w(j / kn)`` for ``j = 0..kn``."""
        return _vectorized(self.w)(np.arange(self.kn + 1) / self.kn)

    @property
    def increments(self) -> np.ndarray:
        """``w_{j+1} - w_j`` for ``j = 0..kn-1``."""
        return np.diff(self.weights)


@dataclass(frozen=True)
class WeightConstants:
    psi1: float
    psi2: float
    psi1_n: float
    psi2_n: float
    Phi11: float
    Phi12: float
    Phi22: float
    kn: int


_LIMIT_CACHE: dict = {}
_LIMIT_LOCK = threading.Lock()
_QUAD_TOL = 1e-10


def _quad(func, a, b, points):
    pts = sorted(p for p in points if a < p < b)
    val, err = integrate.quad(func, a, b, points=pts or None, epsabs=1e-13, epsrel=1e-12, limit=200)
    if not err <= _QUAD_TOL:
        raise QuadratureFailure(f"quadrature error {err:.2e} exceeds {_QUAD_TOL:.0e}")
    return val


def _limit_constants(scheme: WeightScheme):
    key = (scheme.w, scheme.dw, tuple(scheme.breakpoints))
    with _LIMIT_LOCK:
        if key in _LIMIT_CACHE:
            return _LIMIT_CACHE[key]
    w = scheme.w
    dw = scheme.dw
    if dw is None:
        h = 1e-6

        def dw(x):
            lo, hi = max(0.0, x - h), min(1.0, x + h)
            return (w(hi) - w(lo)) / (hi - lo)

    bps = tuple(scheme.breakpoints)

    def phi1(s):
        pts = list(bps) + [b + s for b in bps]
        return _quad(lambda u: dw(u) * dw(u - s), s, 1.0, pts)

    def phi2(s):
        pts = list(bps) + [b + s for b in bps]
        return _quad(lambda u: w(u) * w(u - s), s, 1.0, pts)

    psi1 = phi1(0.0)
    psi2 = phi2(0.0)
    Phi11 = _quad(lambda s: phi1(s) ** 2, 0.0, 1.0, bps)
    Phi12 = _quad(lambda s: phi1(s) * phi2(s), 0.0, 1.0, bps)
    Phi22 = _quad(lambda s: phi2(s) ** 2, 0.0, 1.0, bps)
    out = (psi1, psi2, Phi11, Phi12, Phi22)
    with _LIMIT_LOCK:
        _LIMIT_CACHE.setdefault(key, out)
    return out


def weight_constants(scheme: WeightScheme) -> WeightConstants:
    """Limit constants ``psi1, psi2, Phi_ij`` and their finite-``kn`` versions.

    The limit constants are evaluated once per weight function by adaptive
    quadrature and cached.
    """
    psi1, psi2, Phi11, Phi12, Phi22 = _limit_constants(scheme)
    kn = scheme.kn
    wts = scheme.weights
    psi1_n = kn * float(np.sum(np.diff(wts) ** 2))
    psi2_n = float(np.sum(wts[1:] ** 2)) / kn
    return WeightConstants(psi1, psi2, psi1_n, psi2_n, Phi11, Phi12, Phi22, kn)


@dataclass(frozen=True)
class PreAveragedSeries:
    """Pre-averaged returns (unscaled) together with the window that produced them."""

    values: np.ndarray
    kn: int
    theta: float
    n: int = field(default=0)

    def __len__(self):
        return self.values.size


def _prices(prices) -> np.ndarray:
    return _as_tick_series(prices).values


def preaverage(prices, scheme: WeightScheme) -> PreAveragedSeries:
    y = _prices(prices)
    n = y.size - 1
    if scheme.kn > n:
        raise WindowTooLarge(f"window kn={scheme.kn} exceeds n={n}")
    vals = kernels.preaverage(y, scheme.weights[1:])
    vals.setflags(write=False)
    return PreAveragedSeries(vals, scheme.kn, scheme.theta, n)


def preaverage_levels(prices, scheme: WeightScheme) -> np.ndarray:
    """Same series computed from price levels, ``-sum_j (w_{j+1} - w_j) Y_{i+j}``."""
    y = _prices(prices)
    n = y.size - 1
    kn = scheme.kn
    if kn > n:
        raise WindowTooLarge(f"window kn={kn} exceeds n={n}")
    d = scheme.increments
    out = np.zeros(n - kn + 1)
    for j in range(kn):
        out -= d[j] * y[j:j + n - kn + 1]
    # the j = kn term: w_{kn+1} is zero outside [0, 1] and w_kn = w(1) = 0
    return out


def preavg_products(prices, spec: PowerSpec, scheme: WeightScheme):
    """Summands ``|n^{1/4} ΔȲ_i|^q |n^{1/4} ΔȲ_{i+kn}|^r``, shape ``(m, n - 2kn + 1)``."""
    pa = preaverage(prices, scheme)
    n = pa.n
    if n < 2 * scheme.kn:
        raise WindowTooLarge(f"need n >= 2 kn, got n={n}, kn={scheme.kn}")
    x = n ** 0.25 * pa.values
    return kernels.power_products(x, scheme.kn, spec.q_array, spec.r_array)


def preavg_bipower(prices, spec: PowerSpec, scheme: WeightScheme) -> EstimateVector:
    """Pre-averaged bipower variation: the mean of :func:`preavg_products`."""
    terms = preavg_products(prices, spec, scheme)
    n = _prices(prices).size - 1
    return EstimateVector(
        terms.mean(axis=1), spec, n, kind="preaveraged", preavg=(scheme.theta, scheme.kn)
    )


class NoiseVarianceEstimate(NamedTuple):
    value: float
    negative: bool


def noise_variance_hat(returns) -> NoiseVarianceEstimate:
    """Noise variance from the first-order autocovariance of noisy returns.

    Finite-sample values can be negative; they are returned unchanged with
    ``negative=True``.
    """
    x = _as_return_series(returns).values
    if x.size < 2:
        raise SeriesTooShort("need at least two returns")
    val = -float(np.dot(x[:-1], x[1:])) / (x.size - 1)
    return NoiseVarianceEstimate(val, val < 0)


def _clamp_noise(omega2) -> float:
    omega2 = float(omega2[0] if isinstance(omega2, NoiseVarianceEstimate) else omega2)
    if omega2 < 0:
        warnings.warn("negative noise variance estimate clamped to zero", RuntimeWarning, stacklevel=3)
        return 0.0
    return omega2


def _iv_from(v20: float, consts: WeightConstants, theta: float, omega2: float) -> float:
    scale = theta * consts.psi2_n
    return v20 / scale - consts.psi1_n * omega2 / scale


def iv_hat(prices, scheme: WeightScheme, omega2) -> float:
    """Noise-corrected integrated variance from ``V*(2,0)``."""
    omega2 = _clamp_noise(omega2)
    v20 = preavg_bipower(prices, PowerSpec([2], [0]), scheme).values[0]
    return _iv_from(v20, weight_constants(scheme), scheme.theta, omega2)


def _iq_from(v40: float, iv: float, consts: WeightConstants, theta: float, omega2: float) -> float:
    p1, p2 = consts.psi1_n, consts.psi2_n
    denom = (theta * p2) ** 2
    return (
        v40 / gaussian_abs_moment(4) / denom
        - 2.0 * p2 * p1 * omega2 * iv / denom
        - (p1 * omega2) ** 2 / (theta ** 2 * p2) ** 2
    )


def iq_hat(prices, scheme: WeightScheme, omega2, iv: float) -> float:
    """Noise-corrected integrated quarticity from ``V*(4,0)`` and a prior ``iv_hat``."""
    omega2 = _clamp_noise(omega2)
    v40 = preavg_bipower(prices, PowerSpec([4], [0]), scheme).values[0]
    return _iq_from(v40, float(iv), weight_constants(scheme), scheme.theta, omega2)


def sigma_star_20_closed_form(theta, constants: WeightConstants, sigma_path_moments, omega2) -> float:
    """Asymptotic variance of pre-averaged realized variance under i.i.d. noise.

    ``sigma_path_moments`` is ``(∫σ⁴, ∫σ²)``.
    """
    iq, iv = sigma_path_moments
    return 4.0 * (
        theta ** 3 * constants.Phi22 * iq
        + 2.0 * theta * constants.Phi12 * iv * omega2
        + constants.Phi11 * omega2 ** 2 / theta
    )


def preavg_bipower_limit(
    spec: PowerSpec,
    scheme: WeightScheme,
    variance_path,
    noise_variance=0.0,
    *,
    n: Optional[int] = None,
    noise_lag1_corr: float = 0.0,
) -> np.ndarray:
    """Centering value ``mu_q mu_r ∫ (a σ_s² + b ω_s²)^((q+r)/2) ds``.

    Without ``n`` the asymptotic coefficients ``a = theta psi2``,
    ``b = psi1 / theta`` are used. With ``n`` the exact second moments of the
    finite-window pre-averaged return are used instead, which also accounts for
    first-order noise autocorrelation ``noise_lag1_corr``.
    """
    v = np.asarray(variance_path, dtype=float)
    v = np.maximum(v[:-1] if v.size > 1 else v, 0.0)
    om = np.asarray(noise_variance, dtype=float)
    if om.ndim and om.size > 1:
        om = om[:-1] if om.size == v.size + 1 else om
    if n is None:
        c = weight_constants(scheme)
        a = scheme.theta * c.psi2
        b = c.psi1 / scheme.theta
    else:
        d = scheme.increments
        a = float(np.sum(scheme.weights[1:] ** 2)) / math.sqrt(n)
        b = math.sqrt(n) * (float(np.sum(d * d)) + 2.0 * noise_lag1_corr * float(np.sum(d[1:] * d[:-1])))
    base = a * v + b * om
    out = []
    for q, r in zip(spec.q, spec.r):
        out.append(gaussian_abs_moment(q) * gaussian_abs_moment(r) * float(np.mean(base ** (0.5 * (q + r)))))
    return np.array(out)
