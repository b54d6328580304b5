"""Kernel dispatch: compiled extension when available, NumPy otherwise.

Set ``HFSUB_KERNELS=python`` to force the fallback (used by the benchmark and
by the backend-agreement tests).
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("HFSUB_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback

heston_euler = _impl.heston_euler
power_products = _impl.power_products
# numpy.correlate is already compiled and vectorized and beats the Cython loop
# (see benchmarks/bench_kernels.py), so both backends use it
preaverage = _fallback.preaverage

__all__ = ["BACKEND", "heston_euler", "power_products", "preaverage"]
