"""Studentization, delta-method tests, normal intervals and covariance diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from .core import PowerSpec, _as_tick_series, gaussian_abs_moment
from .errors import InvalidLevel, NonPositiveEstimate, NonPositiveVariance, NotSquare
from .preavg import WeightScheme, _iq_from, _iv_from, _clamp_noise, preavg_bipower, weight_constants
from .subsample import CovEstimate

__all__ = [
    "TestResult",
    "Diagnostics",
    "rate_factor",
    "studentize",
    "jump_test",
    "jump_contrast_gradient",
    "const_vol_test",
    "const_vol_statistic",
    "const_vol_gradient",
    "matrix_diagnostics",
    "confidence_interval",
    "JUMP_SPEC",
    "CONSTVOL_SPEC",
]

JUMP_SPEC = PowerSpec([2, 1], [0, 1])
CONSTVOL_SPEC = PowerSpec([2, 4], [0, 0])


class Diagnostics(NamedTuple):
    min_eigenvalue: float
    condition_number: float
    psd: bool
    ill_conditioned: bool


@dataclass(frozen=True)
class TestResult:
    """Outcome of a delta-method test.

    ``statistic`` is the point value of the tested function and ``std_error``
    its standard error on the same scale, so ``z = statistic / std_error``.
    """

    statistic: float
    std_error: float
    rate: str
    p_value_right: float
    p_value_two_sided: float
    cov_diag: Diagnostics
    z: float = math.nan

    def as_dict(self) -> dict:
        return {
            "statistic": self.statistic,
            "std_error": self.std_error,
            "z": self.z,
            "rate": self.rate,
            "p_value_right": self.p_value_right,
            "p_value_two_sided": self.p_value_two_sided,
            "min_eigenvalue": self.cov_diag.min_eigenvalue,
            "condition_number": self.cov_diag.condition_number,
            "psd": self.cov_diag.psd,
            "ill_conditioned": self.cov_diag.ill_conditioned,
        }


def rate_factor(n: int, rate: str) -> float:
    """``sqrt(n)`` for ``rate="sqrt_n"`` and ``n**0.25`` for ``rate="n_quarter"``."""
    if rate == "sqrt_n":
        return math.sqrt(n)
    if rate == "n_quarter":
        return float(n) ** 0.25
    raise ValueError(f"unknown rate {rate!r}")


def _matrix(cov) -> np.ndarray:
    a = cov.matrix if isinstance(cov, CovEstimate) else np.atleast_2d(np.asarray(cov, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    return a


def matrix_diagnostics(cov) -> Diagnostics:
    """Minimum eigenvalue, condition number and the PSD / ill-conditioned flags.

    A matrix is flagged ill-conditioned when its condition number is at least
    ``10 * dim``.
    """
    a = _matrix(cov)
    eig = np.linalg.eigvalsh(0.5 * (a + a.T))
    sv = np.abs(eig)
    cond = math.inf if sv.min() == 0.0 else float(sv.max() / sv.min())
    scale = max(1.0, float(np.max(np.abs(a))))
    lo = float(eig.min())
    return Diagnostics(lo, cond, lo >= -1e-10 * scale, cond >= 10 * a.shape[0])


def studentize(estimate, target, cov, n: int, rate: str = None) -> np.ndarray:
    """``rate_n (V_k - target_k) / sqrt(cov_kk)`` for every component.

    ``rate`` defaults to ``n_quarter`` for pre-averaged estimates and
    ``sqrt_n`` otherwise.
    """
    values = np.asarray(getattr(estimate, "values", estimate), dtype=float)
    if rate is None:
        rate = "n_quarter" if getattr(estimate, "kind", "plain") == "preaveraged" else "sqrt_n"
    diag = np.diag(_matrix(cov))
    if np.any(diag <= 0):
        raise NonPositiveVariance("covariance has a non-positive diagonal entry")
    return rate_factor(n, rate) * (values - np.asarray(target, dtype=float)) / np.sqrt(diag)


def _finish(value, grad, cov, n, rate) -> TestResult:
    a = _matrix(cov)
    var = float(grad @ a @ grad)
    if not var > 0:
        raise NonPositiveVariance(f"contrast variance {var:.3e} is not positive")
    se = math.sqrt(var) / rate_factor(n, rate)
    z = value / se
    return TestResult(
        float(value), se, rate, float(norm.sf(z)), float(2.0 * norm.sf(abs(z))), matrix_diagnostics(a), z
    )


def jump_contrast_gradient(v20: float, v11: float, log_form: bool) -> np.ndarray:
    """Gradient of the jump contrast with respect to ``(V*(2,0), V*(1,1))``."""
    if log_form:
        return np.array([1.0 / v20, -1.0 / v11])
    return np.array([1.0, -1.0 / gaussian_abs_moment(1) ** 2])


def jump_test(prices, scheme: WeightScheme, cov, log_form: bool = False) -> TestResult:
    """Right-tailed test for jumps from ``V*(2,0) - mu_1^-2 V*(1,1)``.

    ``cov`` is the covariance of ``(V*(2,0), V*(1,1))`` on the ``n^(1/4)``
    scale. The log form tests ``ln V*(2,0) - ln(mu_1^-2 V*(1,1))``.
    """
    prices = _as_tick_series(prices)
    v20, v11 = preavg_bipower(prices, JUMP_SPEC, scheme).values
    c = gaussian_abs_moment(1) ** -2
    if log_form:
        if v20 <= 0 or v11 <= 0:
            raise NonPositiveEstimate("log form needs positive bipower estimates")
        value = math.log(v20) - math.log(c * v11)
    else:
        value = v20 - c * v11
    return _finish(value, jump_contrast_gradient(v20, v11, log_form), cov, prices.n, "n_quarter")


def _iv_iq(v20, v40, consts, theta, omega2):
    iv = _iv_from(v20, consts, theta, omega2)
    iq = _iq_from(v40, iv, consts, theta, omega2)
    return iv, iq


def const_vol_statistic(v20, v40, consts, theta, omega2) -> float:
    """``ln(sqrt(IQ) / IV)`` from the two pre-averaged statistics."""
    iv, iq = _iv_iq(v20, v40, consts, theta, omega2)
    if iv <= 0 or iq <= 0:
        raise NonPositiveEstimate(f"IV={iv:.3e}, IQ={iq:.3e} must be positive")
    return 0.5 * math.log(iq) - math.log(iv)


def const_vol_gradient(v20, v40, consts, theta, omega2) -> np.ndarray:
    """Analytic gradient of :func:`const_vol_statistic` in ``(V*(2,0), V*(4,0))``."""
    iv, iq = _iv_iq(v20, v40, consts, theta, omega2)
    a = theta * consts.psi2_n
    c = 2.0 * consts.psi2_n * consts.psi1_n * omega2 / a ** 2
    div = 1.0 / a
    diq_20 = -c * div
    diq_40 = 1.0 / (gaussian_abs_moment(4) * a ** 2)
    return np.array([0.5 * diq_20 / iq - div / iv, 0.5 * diq_40 / iq])


def const_vol_test(prices, scheme: WeightScheme, cov4, omega2=None) -> TestResult:
    """Test of constant volatility via ``ln(sqrt(IQ) / IV) >= 0``.

    ``cov4`` is the covariance of ``(V*(2,0), V*(4,0))``. ``omega2`` defaults
    to the first-order autocovariance estimate. Use
    ``confidence_interval(..., sidedness="left")`` for the one-sided interval.
    """
    from .core import log_returns
    from .preavg import noise_variance_hat

    prices = _as_tick_series(prices)
    if omega2 is None:
        omega2 = noise_variance_hat(log_returns(prices))
    omega2 = _clamp_noise(omega2)
    v20, v40 = preavg_bipower(prices, CONSTVOL_SPEC, scheme).values
    consts = weight_constants(scheme)
    value = const_vol_statistic(v20, v40, consts, scheme.theta, omega2)
    grad = const_vol_gradient(v20, v40, consts, scheme.theta, omega2)
    return _finish(value, grad, cov4, prices.n, "n_quarter")


def confidence_interval(statistic: float, std_error: float, level: float = 0.95, sidedness: str = "two"):
    """Normal interval; ``left`` gives ``(stat - z se, inf)``, ``right`` gives ``(-inf, stat + z se)``."""
    if not 0.0 < level < 1.0:
        raise InvalidLevel(f"level must lie in (0, 1), got {level}")
    if not std_error > 0:
        raise NonPositiveVariance("standard error must be positive")
    if sidedness == "two":
        h = norm.ppf(0.5 + level / 2.0) * std_error
        return statistic - h, statistic + h
    h = norm.ppf(level) * std_error
    if sidedness == "left":
        return statistic - h, math.inf
    if sidedness == "right":
        return -math.inf, statistic + h
    raise ValueError(f"sidedness must be 'two', 'left' or 'right', got {sidedness!r}")
