"""Pure NumPy implementations of the hot kernels.

These define the reference semantics; ``_ckernels.pyx`` must agree with them
to rounding error. Both accept and return float64 C-contiguous arrays.
"""
import numpy as np


def heston_euler(v0, zw, zb, dt, kappa, long_run_var, xi, rho):
    """Full-truncation Euler scheme for a batch of Heston paths.

    Parameters
    ----------
    v0 : ndarray, shape (batch,)
        Initial variances.
    zw, zb : ndarray, shape (batch, n)
        Independent standard normal shocks driving the price and the
        idiosyncratic part of the variance.

    Returns
    -------
    dx : ndarray, shape (batch, n)
        Log-price increments.
    var : ndarray, shape (batch, n + 1)
        Truncated variance ``max(v, 0)`` on the grid.
    n_trunc : ndarray of int64, shape (batch,)
        Number of steps where the raw Euler variance went negative.
    """
    zw = np.asarray(zw, dtype=np.float64)
    zb = np.asarray(zb, dtype=np.float64)
    batch, n = zw.shape
    sqdt = np.sqrt(dt)
    rho_c = np.sqrt(1.0 - rho * rho)
    v = np.array(v0, dtype=np.float64, copy=True)
    dx = np.empty((batch, n))
    var = np.empty((batch, n + 1))
    n_trunc = np.zeros(batch, dtype=np.int64)
    for t in range(n):
        vp = np.maximum(v, 0.0)
        var[:, t] = vp
        sv = np.sqrt(vp)
        dx[:, t] = sv * sqdt * zw[:, t]
        v = v + kappa * (long_run_var - vp) * dt + xi * sv * sqdt * (rho * zw[:, t] + rho_c * zb[:, t])
        n_trunc += v < 0.0
    var[:, n] = np.maximum(v, 0.0)
    return dx, var, n_trunc


def power_products(x, lag, q, r):
    """``out[k, j] = |x[j]|**q[k] * |x[j + lag]|**r[k]`` for ``j < len(x) - lag``."""
    x = np.asarray(x, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    size = x.size - lag
    if size <= 0:
        return np.empty((q.size, 0))
    a = np.abs(x[:size])
    b = np.abs(x[lag:lag + size])
    out = np.empty((q.size, size))
    for k in range(q.size):
        out[k] = _pow(a, q[k]) * _pow(b, r[k])
    return out


def _pow(a, e):
    if e == 0.0:
        return np.ones_like(a)
    if e == 1.0:
        return a
    if e == 2.0:
        return a * a
    if e == 4.0:
        s = a * a
        return s * s
    return a ** e


def preaverage(y, weights):
    """``out[i] = sum_j weights[j] * (y[i + j + 1] - y[i + j])`` for ``j = 0..len(weights)-1``.

    With ``weights[j] = w((j + 1) / k)`` for ``j = 0..k-1`` this is the
    pre-averaged return starting at price index ``i``; it needs prices
    ``i..i+k`` so there are ``len(y) - k`` outputs.
    """
    y = np.asarray(y, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    dy = np.diff(y)
    k = weights.size
    if dy.size < k:
        return np.empty(0)
    return np.correlate(dy, weights, mode="valid")
