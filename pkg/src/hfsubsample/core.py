"""Series containers, return construction and Gaussian absolute moments.

All containers hold read-only NumPy arrays. The observation grid is implied by
the index: a :class:`TickSeries` of length ``n + 1`` lives on ``t_i = i / n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import LengthMismatch, NegativePower, NonFiniteValue, SeriesTooShort

__all__ = [
    "TickSeries",
    "ReturnSeries",
    "PowerSpec",
    "log_returns",
    "gaussian_abs_moment",
    "scale_returns",
]


def _frozen_array(values, name):
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteValue(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TickSeries:
    """Log-prices observed on the equidistant grid ``i / n``, ``i = 0..n``."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.values, "TickSeries")
        if arr.size < 2:
            raise SeriesTooShort("a tick series needs at least two observations")
        object.__setattr__(self, "values", arr)

    @classmethod
    def from_prices(cls, prices) -> "TickSeries":
        """Build from raw (positive) prices by taking natural logs once."""
        p = np.asarray(prices, dtype=np.float64)
        if np.any(p <= 0):
            raise ValueError("prices must be strictly positive")
        return cls(np.log(p))

    @property
    def n(self) -> int:
        """Number of increments."""
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ReturnSeries:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values, "ReturnSeries"))

    @property
    def n(self) -> int:
        return self.values.size

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class PowerSpec:
    """Powers ``q`` (current return) and ``r`` (next return) of a pure bipower statistic.

    Component ``k`` of the statistic averages ``|x_i|**q[k] * |x_{i+1}|**r[k]``.
    """

    q: tuple
    r: tuple
    even_integer: bool = field(init=False)

    def __post_init__(self):
        q = tuple(float(v) for v in np.atleast_1d(np.asarray(self.q, dtype=float)))
        r = tuple(float(v) for v in np.atleast_1d(np.asarray(self.r, dtype=float)))
        if len(q) != len(r) or len(q) == 0:
            raise LengthMismatch("q and r must have the same positive length")
        if any(not math.isfinite(v) for v in q + r):
            raise NonFiniteValue("powers must be finite")
        if any(v < 0 for v in q + r):
            raise NegativePower("powers must be non-negative")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "r", r)
        even = all(v == int(v) and int(v) % 2 == 0 for v in q + r)
        object.__setattr__(self, "even_integer", even)

    @property
    def m(self) -> int:
        return len(self.q)

    @property
    def q_array(self) -> np.ndarray:
        return np.asarray(self.q)

    @property
    def r_array(self) -> np.ndarray:
        return np.asarray(self.r)

    @property
    def is_power_only(self) -> bool:
        return all(v == 0 for v in self.r)

    def __str__(self) -> str:
        return ",".join(f"({_fmt(a)},{_fmt(b)})" for a, b in zip(self.q, self.r))


def _fmt(x: float) -> str:
    return str(int(x)) if x == int(x) else repr(x)


def _as_tick_series(prices) -> TickSeries:
    return prices if isinstance(prices, TickSeries) else TickSeries(prices)


def _as_return_series(returns) -> ReturnSeries:
    return returns if isinstance(returns, ReturnSeries) else ReturnSeries(returns)


def log_returns(prices) -> ReturnSeries:
    """First differences of a log-price series.

    Raises
    ------
    SeriesTooShort
        If fewer than two prices are supplied.
    """
    if not isinstance(prices, TickSeries):
        arr = np.asarray(prices, dtype=float)
        if arr.size < 2:
            raise SeriesTooShort("need at least two prices to form a return")
        prices = TickSeries(arr)
    return ReturnSeries(np.diff(prices.values))


@lru_cache(maxsize=256)
def _abs_moment(q: float) -> float:
    # lgamma keeps large powers finite; relative error is at the 1e-15 level
    return math.exp(0.5 * q * math.log(2.0) + math.lgamma(0.5 * (q + 1.0)) - 0.5 * math.log(math.pi))


def gaussian_abs_moment(q: float) -> float:
    """Return ``E|Z|**q`` for standard normal ``Z``, i.e. ``2**(q/2) Gamma((q+1)/2) / sqrt(pi)``."""
    q = float(q)
    if not q >= 0:
        raise NegativePower(f"power must be non-negative, got {q}")
    if q == int(q) and int(q) % 2 == 0 and q <= 60:
        # even moments are the double factorial (q-1)!!
        return float(math.prod(range(1, int(q), 2)))
    return _abs_moment(q)


def scale_returns(returns, n: int) -> ReturnSeries:
    """Multiply every return by ``sqrt(n)``; ``n`` must equal the series length."""
    returns = _as_return_series(returns)
    if int(n) != returns.n:
        raise LengthMismatch(f"n={n} does not match {returns.n} returns")
    return ReturnSeries(math.sqrt(n) * returns.values)
