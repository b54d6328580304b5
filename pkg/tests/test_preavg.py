from __future__ import annotations

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hfsubsample.core import PowerSpec, TickSeries, gaussian_abs_moment, log_returns
from hfsubsample.errors import DomainError, InvalidConfig, SeriesTooShort, WindowTooLarge
from hfsubsample.preavg import (
    WeightScheme,
    iq_hat,
    iv_hat,
    noise_variance_hat,
    preaverage,
    preaverage_levels,
    preavg_bipower,
    preavg_bipower_limit,
    sigma_star_20_closed_form,
    weight_constants,
    weight_min_x,
    window_length,
)

# analytic values for w(x) = min(x, 1 - x): ∫w'^2 = 1, ∫w^2 = 1/12 and the Φ integrals
PHI11, PHI12, PHI22 = 1 / 6, 1 / 96, 151 / 80640


@pytest.mark.parametrize("x,expected", [(0.0, 0.0), (1.0, 0.0), (0.5, 0.5), (0.25, 0.25)])
def test_weight_min_x(x, expected):
    assert weight_min_x(x) == expected


def test_weight_domain():
    with pytest.raises(DomainError):
        weight_min_x(1.5)


def test_window_length():
    assert window_length(1.0, 23400) == 153
    assert window_length(1.0, 23400, "floor") == 152
    assert window_length(0.001, 100) == 2
    with pytest.raises(InvalidConfig):
        window_length(1.0, 100, "ceil")
    with pytest.raises(InvalidConfig):
        WeightScheme(1, 1.0)


def test_limit_constants_match_analytic_values():
    c = weight_constants(WeightScheme(152, 1.0))
    assert c.psi1 == pytest.approx(1.0, abs=1e-10)
    assert c.psi2 == pytest.approx(1 / 12, abs=1e-10)
    assert c.Phi11 == pytest.approx(PHI11, abs=1e-10)
    assert c.Phi12 == pytest.approx(PHI12, abs=1e-10)
    assert c.Phi22 == pytest.approx(PHI22, abs=1e-10)
    assert abs(c.psi2_n - 1 / 12) <= 0.01


def test_finite_constants_are_direct_sums():
    s = WeightScheme(40, 1.0)
    c = weight_constants(s)
    w = s.weights
    assert c.psi1_n == pytest.approx(40 * np.sum(np.diff(w) ** 2), rel=1e-14)
    assert c.psi2_n == pytest.approx(np.sum(w[1:] ** 2) / 40, rel=1e-14)


@pytest.mark.parametrize("kn", [10, 40, 160])
def test_finite_constants_converge(kn):
    a = weight_constants(WeightScheme(kn, 1.0))
    b = weight_constants(WeightScheme(2 * kn, 1.0))
    assert abs(b.psi2_n - b.psi2) <= abs(a.psi2_n - a.psi2) + 1e-12
    assert abs(b.psi1_n - b.psi1) <= abs(a.psi1_n - a.psi1) + 1e-12


def test_general_weight_by_quadrature():
    # w(x) = x (1 - x): ∫w'^2 = 1/3, ∫w^2 = 1/30
    s = WeightScheme(50, 1.0, w=lambda x: x * (1 - x), dw=lambda x: 1 - 2 * x, breakpoints=())
    c = weight_constants(s)
    assert c.psi1 == pytest.approx(1 / 3, abs=1e-10)
    assert c.psi2 == pytest.approx(1 / 30, abs=1e-10)
    assert min(c.Phi11, c.Phi12, c.Phi22) > 0


@given(arrays(float, st.integers(12, 80), elements=st.floats(-10, 10)), st.integers(2, 10))
def test_dual_formulas_agree(y, kn):
    s = WeightScheme(kn, 1.0)
    a = preaverage(y, s).values
    b = preaverage_levels(y, s)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12 * max(1.0, np.max(np.abs(y))))


def test_preaverage_length_and_constant_price():
    s = WeightScheme(5, 1.0)
    pa = preaverage(np.full(30, 4.2), s)
    assert len(pa) == 30 - 1 - 5 + 1
    assert np.all(pa.values == 0)
    with pytest.raises(WindowTooLarge):
        preaverage(np.zeros(4), s)


@given(arrays(float, 60, elements=st.floats(-5, 5)), st.floats(-100, 100))
def test_location_invariance(y, c):
    s = WeightScheme(6, 1.0)
    spec = PowerSpec([2, 1], [0, 1])
    a = preavg_bipower(y, spec, s).values
    b = preavg_bipower(y + c, spec, s).values
    np.testing.assert_allclose(a, b, rtol=1e-7, atol=1e-9)


def test_zero_powers_give_one(rng):
    y = np.cumsum(rng.standard_normal(200))
    assert preavg_bipower(y, PowerSpec([0], [0]), WeightScheme(10, 1.0)).values[0] == 1.0


def test_constant_price_estimates_are_zero():
    s = WeightScheme(5, 1.0)
    y = np.ones(100)
    assert preavg_bipower(y, PowerSpec([2], [0]), s).values[0] == 0
    assert iv_hat(y, s, 0.0) == 0
    assert iq_hat(y, s, 0.0, 0.0) == 0


def test_pure_noise_variance_of_preaveraged_returns(rng):
    n, omega2 = 40000, 1e-4
    s = WeightScheme.from_theta(1.0, n)
    y = math.sqrt(omega2) * rng.standard_normal(n + 1)
    x = n ** 0.25 * preaverage(y, s).values
    assert np.var(x) == pytest.approx(weight_constants(s).psi1 * omega2 / s.theta, rel=0.05)


def test_noise_variance_hat():
    a = 0.3
    est = noise_variance_hat([a, -a])
    assert est.value == pytest.approx(a * a) and not est.negative
    assert noise_variance_hat([a, a]).negative
    with pytest.raises(SeriesTooShort):
        noise_variance_hat([0.1])


def test_noise_variance_zero_noise(rng):
    vals = [noise_variance_hat(rng.standard_normal(2000) / math.sqrt(2000)).value for _ in range(200)]
    assert abs(np.mean(vals)) <= 3 * np.std(vals) / math.sqrt(len(vals))


def test_iv_iq_without_noise(rng):
    n, sigma = 23400, 0.3
    s = WeightScheme.from_theta(1.0, n)
    ivs, iqs = [], []
    for _ in range(40):
        y = np.concatenate([[0.0], np.cumsum(sigma * rng.standard_normal(n) / math.sqrt(n))])
        iv = iv_hat(y, s, 0.0)
        ivs.append(iv)
        iqs.append(iq_hat(y, s, 0.0, iv))
    assert np.mean(ivs) == pytest.approx(sigma ** 2, rel=0.03)
    assert np.mean(iqs) == pytest.approx(sigma ** 4, rel=0.08)
    assert math.sqrt(np.mean(iqs)) / np.mean(ivs) == pytest.approx(1.0, abs=0.05)


def test_iv_hat_is_affine_in_noise(rng):
    y = np.cumsum(rng.standard_normal(1000)) * 0.01
    s = WeightScheme(20, 1.0)
    c = weight_constants(s)
    base = iv_hat(y, s, 0.0)
    step = 1e-6
    assert (iv_hat(y, s, step) - base) / step == pytest.approx(-c.psi1_n / (s.theta * c.psi2_n), rel=1e-6)


def test_negative_noise_is_clamped(rng):
    y = np.cumsum(rng.standard_normal(500)) * 0.01
    s = WeightScheme(10, 1.0)
    with pytest.warns(RuntimeWarning):
        v = iv_hat(y, s, -1.0)
    assert v == iv_hat(y, s, 0.0)


def test_sigma_star_closed_form_special_cases():
    c = weight_constants(WeightScheme(152, 1.0))
    assert sigma_star_20_closed_form(1.0, c, (1.0, 1.0), 0.0) == pytest.approx(4 * PHI22)
    assert sigma_star_20_closed_form(1.0, c, (0.0, 0.0), 1.0) == pytest.approx(4 * PHI11)


def test_limit_matches_monte_carlo(rng):
    n = 23400
    s = WeightScheme.from_theta(1.0, n)
    spec = PowerSpec([2, 1], [0, 1])
    sig2, om2 = 1.6e-4, 0.25 * 1.6e-4 / n
    vals = []
    for _ in range(100):
        x = np.concatenate([[0.0], np.cumsum(math.sqrt(sig2 / n) * rng.standard_normal(n))])
        y = x + math.sqrt(om2) * rng.standard_normal(n + 1)
        vals.append(preavg_bipower(y, spec, s).values)
    lim = preavg_bipower_limit(spec, s, np.full(n + 1, sig2), om2, n=n)
    vals = np.array(vals)
    se = vals.std(axis=0, ddof=1) / math.sqrt(len(vals))
    assert np.all(np.abs(vals.mean(axis=0) - lim) <= 4 * se)
    asym = preavg_bipower_limit(spec, s, np.full(n + 1, sig2), om2)
    np.testing.assert_allclose(asym, lim, rtol=0.02)
