# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_fallback.py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, pow

cnp.import_array()


cdef void _abs_pow(const double* src, double* dst, Py_ssize_t size, double e) noexcept nogil:
    # dispatch once per exponent so the inner loops vectorize
    cdef Py_ssize_t j
    cdef double a
    if e == 0.0:
        for j in range(size):
            dst[j] = 1.0
    elif e == 1.0:
        for j in range(size):
            dst[j] = fabs(src[j])
    elif e == 2.0:
        for j in range(size):
            dst[j] = src[j] * src[j]
    elif e == 0.5:
        for j in range(size):
            dst[j] = sqrt(fabs(src[j]))
    elif e == 1.5:
        for j in range(size):
            a = fabs(src[j])
            dst[j] = a * sqrt(a)
    elif e == 4.0:
        for j in range(size):
            a = src[j] * src[j]
            dst[j] = a * a
    else:
        for j in range(size):
            dst[j] = pow(fabs(src[j]), e)


def heston_euler(v0, zw, zb, double dt, double kappa, double long_run_var, double xi, double rho):
    cdef const double[:, ::1] zw_v = np.ascontiguousarray(zw, dtype=np.float64)
    cdef const double[:, ::1] zb_v = np.ascontiguousarray(zb, dtype=np.float64)
    cdef const double[::1] v0_v = np.ascontiguousarray(v0, dtype=np.float64)
    cdef Py_ssize_t batch = zw_v.shape[0]
    cdef Py_ssize_t n = zw_v.shape[1]
    dx_arr = np.empty((batch, n))
    var_arr = np.empty((batch, n + 1))
    trunc_arr = np.zeros(batch, dtype=np.int64)
    cdef double[:, ::1] dx = dx_arr
    cdef double[:, ::1] var = var_arr
    cdef long long[::1] n_trunc = trunc_arr
    cdef double sqdt = sqrt(dt)
    cdef double rho_c = sqrt(1.0 - rho * rho)
    cdef double v, vp, sv, w
    cdef Py_ssize_t b, t
    with nogil:
        for b in range(batch):
            v = v0_v[b]
            for t in range(n):
                vp = v if v > 0.0 else 0.0
                var[b, t] = vp
                sv = sqrt(vp)
                w = zw_v[b, t]
                dx[b, t] = sv * sqdt * w
                v = v + kappa * (long_run_var - vp) * dt + xi * sv * sqdt * (rho * w + rho_c * zb_v[b, t])
                if v < 0.0:
                    n_trunc[b] += 1
            var[b, n] = v if v > 0.0 else 0.0
    return dx_arr, var_arr, trunc_arr


def power_products(x, Py_ssize_t lag, q, r):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] qv = np.ascontiguousarray(q, dtype=np.float64)
    cdef const double[::1] rv = np.ascontiguousarray(r, dtype=np.float64)
    cdef Py_ssize_t size = xv.shape[0] - lag
    cdef Py_ssize_t m = qv.shape[0]
    if size <= 0:
        return np.empty((m, 0))
    out_arr = np.empty((m, size))
    tmp_arr = np.empty(size)
    cdef double[:, ::1] out = out_arr
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t k, j
    with nogil:
        for k in range(m):
            _abs_pow(&xv[0], &out[k, 0], size, qv[k])
            if rv[k] != 0.0:
                _abs_pow(&xv[lag], &tmp[0], size, rv[k])
                for j in range(size):
                    out[k, j] = out[k, j] * tmp[j]
    return out_arr


def preaverage(y, weights):
    cdef const double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[::1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef Py_ssize_t k = wv.shape[0]
    cdef Py_ssize_t size = yv.shape[0] - 1 - k + 1
    if size <= 0:
        return np.empty(0)
    out_arr = np.empty(size)
    dy_arr = np.empty(yv.shape[0] - 1)
    cdef double[::1] out = out_arr
    cdef double[::1] dy_v = dy_arr
    cdef double* dy = &dy_v[0]
    cdef const double* w = &wv[0]
    cdef const double* src
    cdef Py_ssize_t i, j, k4 = k - k % 4
    cdef double a0, a1, a2, a3
    with nogil:
        for i in range(yv.shape[0] - 1):
            dy[i] = yv[i + 1] - yv[i]
        for i in range(size):
            src = dy + i
            # four independent accumulators break the add dependency chain
            a0 = a1 = a2 = a3 = 0.0
            for j in range(0, k4, 4):
                a0 += w[j] * src[j]
                a1 += w[j + 1] * src[j + 1]
                a2 += w[j + 2] * src[j + 2]
                a3 += w[j + 3] * src[j + 3]
            for j in range(k4, k):
                a0 += w[j] * src[j]
            out[i] = (a0 + a1) + (a2 + a3)
    return out_arr
