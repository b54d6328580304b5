"""Compare the compiled kernels with the NumPy fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--n 23400] [--batch 8] [--repeat 5]``
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from hfsubsample import _fallback

try:
    from hfsubsample import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def cases(n: int, batch: int, rng: np.random.Generator):
    kn = int(round(np.sqrt(n)))
    x = rng.standard_normal(n)
    y = np.cumsum(rng.standard_normal(n + 1))
    w = np.minimum(np.arange(1, kn) / kn, 1 - np.arange(1, kn) / kn)
    zw = rng.standard_normal((batch, n))
    zb = rng.standard_normal((batch, n))
    v0 = np.full(batch, 0.04)
    q = np.array([2.0, 1.0, 4.0, 2.0])
    r = np.array([0.0, 1.0, 0.0, 2.0])
    return {
        "heston_euler": lambda m: m.heston_euler(v0, zw, zb, 1.0 / (250 * n), 5.0, 0.04, 0.5, -0.5),
        "power_products": lambda m: m.power_products(x, 1, q, r),
        "preaverage": lambda m: m.preaverage(y, w),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=23400)
    ap.add_argument("--batch", type=int, default=8, help="paths per Euler call")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    backends = {"python": _fallback}
    if _ckernels is not None:
        backends["cython"] = _ckernels
    print(f"n={args.n} batch={args.batch} repeat={args.repeat}")
    print(f"{'kernel':<16}" + "".join(f"{b + ' [ms]':>16}" for b in backends) + f"{'speedup':>10}")
    for name, call in cases(args.n, args.batch, rng).items():
        times = {}
        for b, mod in backends.items():
            call(mod)  # warm up
            times[b] = 1e3 * min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:<16}" + "".join(f"{t:>16.3f}" for t in times.values()) + f"{speed:>10.1f}")
    if _ckernels is None:
        print("compiled extension not available; build with `pip install --no-build-isolation -e .`")


if __name__ == "__main__":
    main()
