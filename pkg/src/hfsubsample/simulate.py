"""Seeded generation of Heston paths, microstructure noise and compound Poisson jumps."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import kernels
from .core import TickSeries, _as_tick_series
from .errors import InvalidConfig, MissingSigmaPath

__all__ = [
    "HestonConfig",
    "NoiseConfig",
    "JumpConfig",
    "HestonPath",
    "JumpLog",
    "rng_stream",
    "stationary_variance",
    "simulate_heston",
    "simulate_heston_batch",
    "add_noise",
    "add_jumps",
]


def rng_stream(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Generator fully determined by ``(seed, stream_id)``; distinct ids give independent streams."""
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),)))


@dataclass(frozen=True)
class HestonConfig:
    """Square-root stochastic variance model sampled at ``n`` equidistant points of ``[0, 1]``.

    ``kappa``, ``long_run_var`` and ``xi`` are in annual units and the unit
    interval spans ``horizon`` years (one trading day by default), so the Euler
    step is ``horizon / n``. ``model="BM"`` gives Brownian motion with constant
    variance ``long_run_var``.
    """

    kappa: float = 5.0
    long_run_var: float = 0.04
    xi: float = 0.5
    rho: float = -0.5
    n: int = 23400
    seed: int = 0
    model: str = "SV"
    horizon: float = 1.0 / 250.0

    def __post_init__(self):
        if not self.horizon > 0:
            raise InvalidConfig("horizon must be positive")
        if self.model not in ("SV", "BM"):
            raise InvalidConfig(f"model must be 'SV' or 'BM', got {self.model!r}")
        if self.n < 1:
            raise InvalidConfig("n must be positive")
        if not self.long_run_var > 0:
            raise InvalidConfig("long-run variance must be positive")
        if self.model == "SV":
            if not self.kappa > 0 or self.xi < 0:
                raise InvalidConfig("need kappa > 0 and xi >= 0")
        if not -1.0 <= self.rho <= 1.0:
            raise InvalidConfig("rho must lie in [-1, 1]")

    @property
    def feller_ratio(self) -> float:
        """``2 kappa sigma^2 / xi^2``; values below 1 mean the variance can hit zero."""
        return math.inf if self.xi == 0 else 2.0 * self.kappa * self.long_run_var / self.xi ** 2


class HestonPath(NamedTuple):
    prices: TickSeries
    variance: np.ndarray
    iv: float
    iq: float
    n_truncated: int


def stationary_variance(cfg: HestonConfig, rng: np.random.Generator, size=None):
    """Draw from the Gamma stationary law with shape ``2 kappa s2 / xi^2`` and rate ``2 kappa / xi^2``."""
    if cfg.model == "BM" or cfg.xi == 0:
        return np.full(size, cfg.long_run_var) if size is not None else cfg.long_run_var
    shape = 2.0 * cfg.kappa * cfg.long_run_var / cfg.xi ** 2
    rate = 2.0 * cfg.kappa / cfg.xi ** 2
    return rng.gamma(shape, 1.0 / rate, size=size)


def simulate_heston_batch(cfg: HestonConfig, batch: int, rng: np.random.Generator):
    """Simulate ``batch`` paths at once.

    Returns ``(dx, var, n_trunc)`` where ``var`` is the spot variance per unit
    of the sampling interval (annual variance times ``horizon``).
    """
    n = cfg.n
    v0 = np.atleast_1d(stationary_variance(cfg, rng, size=batch)).astype(float)
    zw = rng.standard_normal((batch, n))
    zb = rng.standard_normal((batch, n))
    dt = cfg.horizon / n
    if cfg.model == "BM":
        dx, var, nt = kernels.heston_euler(v0, zw, zb, dt, 0.0, cfg.long_run_var, 0.0, 0.0)
    else:
        dx, var, nt = kernels.heston_euler(v0, zw, zb, dt, cfg.kappa, cfg.long_run_var, cfg.xi, cfg.rho)
    return dx, var * cfg.horizon, nt


def _path_from(dx, var, n_trunc, x0=0.0) -> HestonPath:
    prices = np.concatenate([[x0], x0 + np.cumsum(dx)])
    dt = 1.0 / dx.size
    left = var[:-1]
    return HestonPath(TickSeries(prices), var.copy(), float(left.sum() * dt), float((left * left).sum() * dt), int(n_trunc))


def simulate_heston(cfg: HestonConfig, rng: Optional[np.random.Generator] = None) -> HestonPath:
    """One Euler path of log-prices with its spot variance, IV and IQ.

    IV and IQ are left Riemann sums of the (truncated) spot variance on the
    unit-interval scale, the exact integrated quantities of the discretized model.
    """
    rng = rng_stream(cfg.seed, 0) if rng is None else rng
    dx, var, nt = simulate_heston_batch(cfg, 1, rng)
    return _path_from(dx[0], var[0], nt[0])


@dataclass(frozen=True)
class NoiseConfig:
    """Additive microstructure noise.

    ``iid``: ``N(0, omega2)``. ``ma1``: ``sqrt(omega2) u`` with ``u`` a unit
    variance MA(1) in ``zeta``. ``hetero_ma1``: ``gamma sigma_{i/n} u / sqrt(n)``.
    """

    kind: str = "none"
    omega2: float = 0.0
    zeta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "iid", "ma1", "hetero_ma1"):
            raise InvalidConfig(f"unknown noise kind {self.kind!r}")
        if self.omega2 < 0:
            raise InvalidConfig("omega2 must be non-negative")

    @property
    def lag1_corr(self) -> float:
        """First-order autocorrelation of the noise."""
        if self.kind in ("ma1", "hetero_ma1"):
            return self.zeta / (1.0 + self.zeta ** 2)
        return 0.0


def _ma1(rng, size, zeta):
    e = rng.standard_normal(size + 1) / math.sqrt(1.0 + zeta * zeta)
    return e[1:] + zeta * e[:-1]


def add_noise(prices, cfg: NoiseConfig, rng: np.random.Generator, variance_path=None) -> TickSeries:
    """Add noise to every observed log-price ``X_{i/n}``, ``i = 0..n``."""
    prices = _as_tick_series(prices)
    size = prices.values.size
    if cfg.kind == "none":
        return prices
    if cfg.kind == "iid":
        if cfg.omega2 == 0:
            return prices
        eps = math.sqrt(cfg.omega2) * rng.standard_normal(size)
    elif cfg.kind == "ma1":
        if cfg.omega2 == 0:
            return prices
        eps = math.sqrt(cfg.omega2) * _ma1(rng, size, cfg.zeta)
    else:
        if variance_path is None:
            raise MissingSigmaPath("heteroscedastic noise needs the spot variance path")
        if cfg.gamma == 0:
            return prices
        sig = np.sqrt(np.maximum(np.asarray(variance_path, dtype=float), 0.0))
        if sig.size != size:
            raise MissingSigmaPath(f"variance path has {sig.size} points, prices have {size}")
        eps = cfg.gamma * sig / math.sqrt(prices.n) * _ma1(rng, size, cfg.zeta)
    return TickSeries(prices.values + eps)


@dataclass(frozen=True)
class JumpConfig:
    """Compound Poisson jumps: ``Poisson(intensity)`` times uniform on ``[0, 1]``, sizes ``N(0, size_var)``."""

    intensity: float = 0.0
    size_var: float = 0.0

    def __post_init__(self):
        if self.intensity < 0 or self.size_var < 0:
            raise InvalidConfig("intensity and size variance must be non-negative")


class JumpLog(NamedTuple):
    times: np.ndarray
    sizes: np.ndarray
    increments: np.ndarray


def add_jumps(prices, cfg: JumpConfig, rng: np.random.Generator, *, times=None, sizes=None):
    """Add jumps to the log-price path; a jump at time ``t`` moves every price at ``i/n >= t``.

    ``times`` and ``sizes`` may be given to force specific jumps.
    """
    prices = _as_tick_series(prices)
    n = prices.n
    if times is None:
        count = rng.poisson(cfg.intensity)
        times = np.sort(rng.uniform(0.0, 1.0, count))
        sizes = rng.normal(0.0, math.sqrt(cfg.size_var), count)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    sizes = np.atleast_1d(np.asarray(sizes, dtype=float))
    # the jump enters the first increment (i-1)/n < t <= i/n
    idx = np.clip(np.ceil(times * n).astype(int), 1, n)
    inc = np.zeros(n)
    np.add.at(inc, idx - 1, sizes)
    if not times.size:
        return prices, JumpLog(times, sizes, inc)
    new = prices.values + np.concatenate([[0.0], np.cumsum(inc)])
    return TickSeries(new), JumpLog(times, sizes, inc)
