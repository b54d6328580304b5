"""Subsampling estimators of the asymptotic covariance of bipower-type statistics.

Every estimator here is an average of outer products of centered subsample
statistics, hence positive semi-definite by construction.

Normalization: with ``block_scale="count"`` (default) a subsample deviation
is scaled by ``rate**2 * (summands per subsample) / (summands in total)``, so
the raw estimator only misses autocovariances truncated at block edges and the
finite-sample corrections inflate it. ``block_scale="length"`` scales by the
data length per subsample instead, ``n / L`` (noise-free) or ``sqrt(n) / L``
(pre-averaged) when the blocks tile the sample.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import PowerSpec, ReturnSeries, _as_return_series, _as_tick_series
from .errors import (
    BlockTooSmall,
    InsufficientData,
    InvalidConfig,
    SeriesTooShort,
    SubsampleTooSmall,
    TooFewSubsamples,
    ZeroBlocks,
)
from .preavg import WeightScheme, preavg_products
from .variation import TruncationRule, _function_terms, gamma_terms, truncate

__all__ = [
    "SubsampleConfig",
    "CovEstimate",
    "cov_estimate",
    "subsample_cov_power",
    "subsample_cov_bipower",
    "subsample_cov_truncated",
    "subsample_cov_noisy",
    "n_block",
    "suggest_tuning",
    "s_hat_power",
]

NOISY_P_CORRECTION = 0.75
PLAIN_P_CORRECTION = 1.0


@dataclass(frozen=True)
class SubsampleConfig:
    """Tuning of the blocked subsamplers.

    Parameters
    ----------
    L : int
        Number of subsamples.
    p : int
        Block length in returns (noise-free) or in multiples of ``kn`` (noisy).
    apply_L_correction : bool
        Divide by ``1 - 1/L`` to account for centering at the full-sample estimate.
    apply_p_correction : bool
        Divide by ``1 - p_correction_weight / p``.
    p_correction_weight : float, optional
        Defaults to 0.75 for the pre-averaged estimator and 1.0 otherwise.
    inflate_partial_window : bool
        When the blocks do not tile the sample, the covariance from the covered
        window is returned unchanged (False) or divided by the covered fraction (True).
    block_scale : {"count", "length"}
        Normalize block deviations by the number of summands a subsample
        uses (``count``) or by the length of data it spans (``length``).
    """

    L: int
    p: int = 2
    apply_L_correction: bool = False
    apply_p_correction: bool = False
    p_correction_weight: Optional[float] = None
    inflate_partial_window: bool = False
    block_scale: str = "count"

    def __post_init__(self):
        if int(self.L) != self.L or int(self.p) != self.p:
            raise InvalidConfig("L and p must be integers")
        object.__setattr__(self, "L", int(self.L))
        object.__setattr__(self, "p", int(self.p))
        if self.block_scale not in ("length", "count"):
            raise InvalidConfig("block_scale must be 'length' or 'count'")
        if self.L < 2:
            raise TooFewSubsamples(f"need L >= 2 subsamples, got {self.L}")

    @classmethod
    def noisy(cls, L: int, p: int, corrections: bool = True, **kwargs) -> "SubsampleConfig":
        """Configuration for the pre-averaged subsampler, finite-sample corrections on by default."""
        return cls(L, p, apply_L_correction=corrections, apply_p_correction=corrections, **kwargs)

    def correction_factor(self, default_weight: float) -> float:
        factor = 1.0
        if self.apply_L_correction:
            factor /= 1.0 - 1.0 / self.L
        if self.apply_p_correction:
            w = default_weight if self.p_correction_weight is None else self.p_correction_weight
            factor /= 1.0 - w / self.p
        return factor


@dataclass(frozen=True)
class CovEstimate:
    """Symmetric covariance matrix estimate with eigenvalue diagnostics."""

    matrix: np.ndarray
    min_eigenvalue: float
    condition_number: float
    estimator_id: str
    effective_window: float = 1.0
    asymmetry: float = 0.0
    details: dict = field(default_factory=dict, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def psd(self) -> bool:
        return self.min_eigenvalue >= -1e-10 * max(1.0, float(np.max(np.abs(self.matrix))))

    @property
    def positive_definite(self) -> bool:
        return self.min_eigenvalue > 0

    def variance(self, weights) -> float:
        """``w' Σ w`` for a contrast vector ``w``."""
        w = np.asarray(weights, dtype=float)
        return float(w @ self.matrix @ w)


def cov_estimate(matrix, estimator_id: str, effective_window: float = 1.0, **details) -> CovEstimate:
    """Wrap a square matrix: symmetrize, record asymmetry and eigen diagnostics."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.shape[0] != a.shape[1]:
        raise ValueError("covariance matrix must be square")
    asym = float(np.max(np.abs(a - a.T))) if a.size else 0.0
    sym = 0.5 * (a + a.T)
    sym.setflags(write=False)
    eig = np.linalg.eigvalsh(sym)
    sv = np.abs(eig)
    smallest = float(sv.min())
    cond = math.inf if smallest == 0.0 else float(sv.max() / smallest)
    return CovEstimate(sym, float(eig.min()), cond, estimator_id, float(effective_window), asym, details)


def _outer_mean(dev: np.ndarray) -> np.ndarray:
    # dev has shape (m, L); left-to-right reduction over subsamples
    return dev @ dev.T / dev.shape[1]


def subsample_cov_power(returns, f, L: int) -> CovEstimate:
    """Strided subsampler for power variation.

    Subsample ``l`` holds returns ``l, l + L, l + 2L, ...``. When ``L`` does not
    divide ``n`` the trailing ``n mod L`` returns are left out of the
    subsamples but kept in the centering statistic.
    """
    returns = _as_return_series(returns)
    n = returns.n
    L = int(L)
    if L < 2:
        raise TooFewSubsamples(f"need L >= 2 subsamples, got {L}")
    per = n // L
    if per < 2:
        raise SubsampleTooSmall(f"n={n} leaves {per} returns per subsample with L={L}")
    x = math.sqrt(n) * returns.values
    terms = _function_terms(x, f)
    full = terms.sum(axis=1) / n
    sub = terms[:, : per * L].reshape(terms.shape[0], per, L).mean(axis=1)
    dev = math.sqrt(per) * (sub - full[:, None])
    return cov_estimate(
        _outer_mean(dev), "subsample_power", per * L / n, L=L, subsample_means=sub, center=full
    )


def _block_subsampler(terms, centre, block_len, usable, n_blocks_per, L, scale, factor, ident, window, inflate):
    """Shared core: ``terms[:, j]`` for block ``b`` are columns ``b*block_len + [0, usable)``."""
    m = terms.shape[0]
    total_blocks = n_blocks_per * L
    need = total_blocks * block_len
    if terms.shape[1] < need:
        pad = np.zeros((m, need - terms.shape[1]))
        terms = np.concatenate([terms, pad], axis=1)
    blocks = terms[:, :need].reshape(m, total_blocks, block_len)[:, :, :usable]
    v = blocks.sum(axis=2) / usable
    sub = v.reshape(m, n_blocks_per, L).mean(axis=1)
    dev = math.sqrt(scale) * (sub - centre[:, None])
    mat = _outer_mean(dev) * factor
    if inflate and window < 1.0:
        mat = mat / window
    return cov_estimate(mat, ident, window, L=L, block_stats=v, subsample_means=sub, center=centre)


def _bipower_subsampler(x: np.ndarray, spec, cfg: SubsampleConfig, ident: str) -> CovEstimate:
    n = x.size
    p = cfg.p
    if p < 2:
        raise BlockTooSmall(f"block length p={p} < 2")
    if n < 2:
        raise SeriesTooShort("need at least two returns")
    n_per = (n // p) // cfg.L
    if n_per < 1:
        raise InsufficientData(f"n={n} cannot hold L={cfg.L} blocks of p={p} returns")
    terms = gamma_terms(x, spec, 1)
    # centre at the summand mean so equal block statistics give exactly zero
    full = terms.mean(axis=1)
    used = n_per * cfg.L * p
    factor = cfg.correction_factor(PLAIN_P_CORRECTION)
    if cfg.block_scale == "length":
        scale = float(n_per * p)
    else:
        scale = n * n_per * (p - 1) / terms.shape[1]
    return _block_subsampler(
        terms, full, p, p - 1, n_per, cfg.L, scale, factor, ident, used / n, cfg.inflate_partial_window
    )


def subsample_cov_bipower(returns, spec, cfg: SubsampleConfig) -> CovEstimate:
    """Blocked subsampler for bipower variation.

    Block ``i`` holds ``p`` consecutive returns; its statistic averages the
    ``p - 1`` adjacent products inside it. Blocks are dealt to subsamples
    round-robin and each subsample mean is centered at the full-sample
    bipower variation.
    """
    returns = _as_return_series(returns)
    x = math.sqrt(returns.n) * returns.values
    return _bipower_subsampler(x, spec, cfg, "subsample_bipower")


def subsample_cov_truncated(returns, spec: PowerSpec, rule: TruncationRule, cfg: SubsampleConfig) -> CovEstimate:
    """As :func:`subsample_cov_bipower` with every return truncated at ``u_n``."""
    returns = _as_return_series(returns)
    n = returns.n
    u = rule.threshold(n)
    x = math.sqrt(n) * truncate(returns.values, u)
    est = _bipower_subsampler(x, spec, cfg, "subsample_truncated")
    est.details["threshold"] = u
    return est


def n_block(n: int, kn: int, p: int, L: int) -> int:
    """Blocks of ``p * kn`` increments available to each of ``L`` subsamples."""
    if min(n, kn, p, L) <= 0:
        raise InvalidConfig("n, kn, p and L must be positive")
    out = (int(n) // (int(p) * int(kn))) // int(L)
    if out == 0:
        raise ZeroBlocks(f"n={n} cannot hold L={L} blocks of p*kn={p * kn} increments")
    return out


def subsample_cov_noisy(prices, spec: PowerSpec, scheme: WeightScheme, cfg: SubsampleConfig) -> CovEstimate:
    """Subsampler for pre-averaged bipower variation.

    Block ``i`` spans prices ``[i p kn, (i + 1) p kn]``; only pre-averaged
    products whose price window lies entirely inside the block enter its
    statistic, so no block borrows data from a neighbour. When ``L p kn`` does
    not divide ``n`` the first ``n_block * L * p * kn`` increments are used.
    """
    prices = _as_tick_series(prices)
    n = prices.n
    kn = scheme.kn
    p = cfg.p
    if p < 3:
        raise BlockTooSmall(
            f"p={p} is too small: a block of p*kn increments leaves (p-2)*kn+1 products, "
            "so p >= 3 is required"
        )
    try:
        nb = n_block(n, kn, p, cfg.L)
    except ZeroBlocks as exc:
        raise InsufficientData(str(exc)) from exc
    terms = preavg_products(prices, spec, scheme)
    full = terms.mean(axis=1)
    block_len = p * kn
    usable = (p - 2) * kn + 1
    used = nb * cfg.L * block_len
    factor = cfg.correction_factor(NOISY_P_CORRECTION)
    if cfg.block_scale == "length":
        scale = math.sqrt(n) * (nb * block_len) / n
    else:
        scale = math.sqrt(n) * (nb * usable) / terms.shape[1]
    est = _block_subsampler(
        terms, full, block_len, usable, nb, cfg.L, scale, factor, "subsample_noisy", used / n,
        cfg.inflate_partial_window,
    )
    est.details.update(n_block=nb, kn=kn, p=p)
    return est


def suggest_tuning(n: int, regime: str, c_L: float = 1.0, c_p: float = 1.0, *, kn: Optional[int] = None):
    """Rate-optimal ``(L, p)`` up to the user-supplied constants.

    ``power``: ``L ~ n^(2/3)``; ``bipower``: ``L ~ n^(2/5)``, ``p ~ n^(1/5)``;
    ``noisy``: ``L ~ n^(1/5)``, ``p ~ n^(1/10)`` (``p >= 3``). The result is
    reduced until at least one block per subsample fits; ``kn`` defaults to
    ``round(sqrt(n))`` for the noisy regime.
    """
    n = int(n)
    if n < 100:
        warnings.warn("tuning rules are asymptotic; n < 100 is very small", RuntimeWarning, stacklevel=2)
    if regime == "power":
        L = max(2, int(round(c_L * n ** (2.0 / 3.0))))
        p = 1
        unit = 1
        p_min = 1
    elif regime == "bipower":
        L = max(2, int(round(c_L * n ** 0.4)))
        p = max(2, int(round(c_p * n ** 0.2)))
        unit = 1
        p_min = 2
    elif regime == "noisy":
        L = max(2, int(round(c_L * n ** 0.2)))
        p = max(3, int(round(c_p * n ** 0.1)))
        unit = kn if kn is not None else max(2, int(round(math.sqrt(n))))
        p_min = 3
    else:
        raise InvalidConfig(f"unknown regime {regime!r}")

    def feasible(L_, p_):
        if regime == "power":
            return n // L_ >= 2
        return (n // (p_ * unit)) // L_ >= 1

    degraded = False
    while not feasible(L, p):
        degraded = True
        if L > 2:
            L -= 1
        elif p > p_min:
            p -= 1
        else:
            break
    if degraded:
        warnings.warn(f"tuning reduced to L={L}, p={p} to fit n={n}", RuntimeWarning, stacklevel=2)
    return L, p


def s_hat_power(returns, f) -> CovEstimate:
    """Covariance estimate for power variation from squared first differences of ``f``."""
    returns = _as_return_series(returns)
    n = returns.n
    if n < 2:
        raise SeriesTooShort("need at least two returns")
    terms = _function_terms(math.sqrt(n) * returns.values, f)
    d = terms[:, :-1] - terms[:, 1:]
    return cov_estimate(d @ d.T / (2.0 * n), "s_hat_power")
