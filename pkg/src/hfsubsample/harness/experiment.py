"""Monte Carlo runner over a grid of simulation designs and tuning choices.

Paths are simulated once per ``(model, noise, n)`` group and replication and
shared by every ``(theta, L, p)`` cell of that group. Each replication owns the
random stream ``(seed, (group, rep))``, so output does not depend on worker
count or scheduling.
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..altvar import ObservedAvarConfig, observed_avar, sigma_tilde_star_pv
from ..core import PowerSpec, gaussian_abs_moment
from ..errors import HFSubsampleError
from ..preavg import WeightScheme, preavg_bipower, preavg_bipower_limit
from ..simulate import HestonConfig, NoiseConfig, _path_from, add_noise, rng_stream, simulate_heston_batch
from ..subsample import SubsampleConfig, n_block, subsample_cov_noisy

__all__ = ["SCHEMA_VERSION", "ExperimentSpec", "run_experiment", "NOISE_KINDS", "ESTIMATORS"]

SCHEMA_VERSION = "1"
NOISE_KINDS = ("general", "iid", "none")
ESTIMATORS = ("subsample", "pv", "observed_avar")
Z_RIGHT_95 = 1.6448536269514722


@dataclass(frozen=True)
class ExperimentSpec:
    """Scenario grid and Monte Carlo settings.

    ``noise``: ``general`` is heteroscedastic MA(1) noise with ratio ``gamma``
    and MA parameter ``zeta``; ``iid`` uses Gaussian noise with variance
    ``gamma**2 * IV / n`` per path; ``none`` adds nothing.
    """

    models: tuple = ("SV",)
    noises: tuple = ("general",)
    ns: tuple = (23400,)
    thetas: tuple = (1.0,)
    Ls: tuple = (15,)
    ps: tuple = (10,)
    q: tuple = (2.0, 1.0)
    r: tuple = (0.0, 1.0)
    estimators: tuple = ESTIMATORS
    n_sim: int = 100
    seed: int = 0
    corrections: bool = True
    gamma: float = 0.5
    zeta: float = -0.4
    horizon: float = 1.0 / 250.0
    avar_B: Optional[int] = None
    avar_K1: int = 1
    avar_K2: int = 2
    workers: int = 1
    out_dir: Optional[str] = None

    def __post_init__(self):
        for name in ("models", "noises", "ns", "thetas", "Ls", "ps", "q", "r", "estimators"):
            object.__setattr__(self, name, tuple(np.atleast_1d(getattr(self, name)).tolist()))
        if self.n_sim < 1:
            raise ValueError("n_sim must be at least 1")
        bad = set(self.noises) - set(NOISE_KINDS)
        if bad:
            raise ValueError(f"unknown noise kinds {sorted(bad)}")
        bad = set(self.estimators) - set(ESTIMATORS)
        if bad:
            raise ValueError(f"unknown estimators {sorted(bad)}")

    @property
    def spec(self) -> PowerSpec:
        return PowerSpec(self.q, self.r)

    def groups(self):
        return list(itertools.product(self.models, self.noises, self.ns))

    def cells(self):
        """``(cell_id, group_id, model, noise, n, theta, L, p)`` for every grid point."""
        out = []
        cid = 0
        for gid, (model, noise, n) in enumerate(self.groups()):
            for theta, L, p in itertools.product(self.thetas, self.Ls, self.ps):
                out.append((cid, gid, model, noise, int(n), float(theta), int(L), int(p)))
                cid += 1
        return out

    def to_json(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        d.pop("workers")
        return d


def _cell_error(spec: ExperimentSpec, cell) -> Optional[str]:
    cid, gid, model, noise, n, theta, L, p = cell
    try:
        scheme = WeightScheme.from_theta(theta, n)
        SubsampleConfig.noisy(L, p)
        if p < 3:
            return f"BlockTooSmall: p={p} < 3"
        n_block(n, scheme.kn, p, L)
        if n < 4 * scheme.kn:
            return f"WindowTooLarge: n={n} < 4 kn={4 * scheme.kn}"
    except HFSubsampleError as exc:
        return f"{type(exc).__name__}: {exc}"
    return None


def _jump_weights(spec: PowerSpec) -> Optional[np.ndarray]:
    if spec.m >= 2 and spec.q[:2] == (2.0, 1.0) and spec.r[:2] == (0.0, 1.0):
        w = np.zeros(spec.m)
        w[0] = 1.0
        w[1] = -gaussian_abs_moment(1) ** -2
        return w
    return None


def _simulate(spec: ExperimentSpec, model, noise, n, rng):
    hcfg = HestonConfig(n=n, model=model, horizon=spec.horizon)
    dx, var, nt = simulate_heston_batch(hcfg, 1, rng)
    path = _path_from(dx[0], var[0], nt[0])
    v = path.variance
    if noise == "general":
        ncfg = NoiseConfig("hetero_ma1", zeta=spec.zeta, gamma=spec.gamma)
        noise_var = spec.gamma ** 2 * v / n
    elif noise == "iid":
        omega2 = spec.gamma ** 2 * path.iv / n
        ncfg = NoiseConfig("iid", omega2=omega2)
        noise_var = omega2
    else:
        ncfg = NoiseConfig("none")
        noise_var = 0.0
    y = add_noise(path.prices, ncfg, rng, v)
    return path, y, noise_var, ncfg.lag1_corr


def _estimator_rows(est_id, cov, values, target, n, jw):
    m = values.size
    row = {
        "estimator": est_id,
        "min_eigenvalue": cov.min_eigenvalue,
        "condition_number": cov.condition_number,
        "nonpositive_definite": int(cov.min_eigenvalue <= 0),
        "ill_conditioned": int(cov.min_eigenvalue > 0 and cov.condition_number >= 10 * m),
        "effective_window": cov.effective_window,
    }
    diag = np.diag(cov.matrix)
    rate = float(n) ** 0.25
    for k in range(m):
        row[f"z{k}"] = rate * (values[k] - target[k]) / math.sqrt(diag[k]) if diag[k] > 0 else math.nan
    if jw is not None:
        cv = float(jw @ cov.matrix @ jw)
        row["contrast_var"] = cv
        row["negative_variance"] = int(cv <= 0)
        row["jump_z"] = rate * float(jw @ values) / math.sqrt(cv) if cv > 0 else math.nan
    return row


def _run_unit(args):
    """Replications ``reps`` of one group; returns rows in deterministic order."""
    spec, gid, reps = args
    spec_pw = spec.spec
    jw = _jump_weights(spec_pw)
    group_cells = [c for c in spec.cells() if c[1] == gid]
    live = [c for c in group_cells if _cell_error(spec, c) is None]
    rows = []
    for rep in reps:
        rng = rng_stream(spec.seed, (gid << 32) | rep)
        model, noise, n = spec.groups()[gid]
        path, y, noise_var, corr = _simulate(spec, model, noise, int(n), rng)
        for cell in live:
            cid, _, _, _, n, theta, L, p = cell
            base = {
                "schema_version": SCHEMA_VERSION, "cell": cid, "model": model, "noise": noise, "n": n,
                "theta": theta, "L": L, "p": p, "rep": rep,
            }
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                try:
                    scheme = WeightScheme.from_theta(theta, n)
                    base["kn"] = scheme.kn
                    est = preavg_bipower(y, spec_pw, scheme)
                    target = preavg_bipower_limit(
                        spec_pw, scheme, path.variance, noise_var, n=n, noise_lag1_corr=corr
                    )
                    base["iv"] = path.iv
                    for k in range(spec_pw.m):
                        base[f"v{k}"] = est.values[k]
                        base[f"target{k}"] = target[k]
                    covs = {}
                    if "subsample" in spec.estimators:
                        covs["subsample"] = subsample_cov_noisy(
                            y, spec_pw, scheme, SubsampleConfig.noisy(L, p, corrections=spec.corrections)
                        )
                    if "pv" in spec.estimators:
                        covs["pv"] = sigma_tilde_star_pv(y, spec_pw, scheme)
                    if "observed_avar" in spec.estimators:
                        B = spec.avar_B or L
                        covs["observed_avar"] = observed_avar(
                            y, spec_pw, ObservedAvarConfig(B, spec.avar_K1, spec.avar_K2), scheme=scheme
                        )
                    for name in spec.estimators:
                        row = dict(base)
                        row.update(_estimator_rows(name, covs[name], est.values, target, n, jw))
                        row["error"] = ""
                        rows.append(row)
                except HFSubsampleError as exc:
                    row = dict(base)
                    row.update(estimator="", error=f"{type(exc).__name__}: {exc}")
                    rows.append(row)
    return rows


def _columns(spec: ExperimentSpec):
    m = spec.spec.m
    cols = ["schema_version", "cell", "model", "noise", "n", "theta", "kn", "L", "p", "rep", "estimator", "iv"]
    cols += [f"v{k}" for k in range(m)] + [f"target{k}" for k in range(m)]
    cols += ["min_eigenvalue", "condition_number", "nonpositive_definite", "ill_conditioned", "effective_window"]
    cols += [f"z{k}" for k in range(m)]
    if _jump_weights(spec.spec) is not None:
        cols += ["contrast_var", "negative_variance", "jump_z"]
    return cols + ["error"]


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def summarize(rows, spec: ExperimentSpec, errors) -> dict:
    """Per cell and estimator aggregates in the layout of the ill-conditioning table."""
    out = {}
    m = spec.spec.m
    keyed = {}
    for row in rows:
        if row.get("error"):
            continue
        keyed.setdefault((row["cell"], row["estimator"]), []).append(row)
    cells = {c[0]: c for c in spec.cells()}
    for (cid, est), rs in sorted(keyed.items()):
        _, _, model, noise, n, theta, L, p = cells[cid]
        entry = {
            "cell": cid, "model": model, "noise": noise, "n": n, "theta": theta, "L": L, "p": p,
            "estimator": est, "count": len(rs),
            "nonpositive_definite": float(np.mean([r["nonpositive_definite"] for r in rs])),
            "ill_conditioned": float(np.mean([r["ill_conditioned"] for r in rs])),
        }
        for k in range(m):
            z = np.array([r[f"z{k}"] for r in rs], dtype=float)
            z = z[np.isfinite(z)]
            entry[f"z{k}_mean"] = float(z.mean()) if z.size else math.nan
            entry[f"z{k}_std"] = float(z.std(ddof=1)) if z.size > 1 else math.nan
            entry[f"z{k}_finite"] = int(z.size)
        if "negative_variance" in rs[0]:
            entry["negative_variance"] = float(np.mean([r["negative_variance"] for r in rs]))
            jz = np.array([r["jump_z"] for r in rs], dtype=float)
            jz = jz[np.isfinite(jz)]
            entry["jump_reject_95"] = float(np.mean(jz > Z_RIGHT_95)) if jz.size else math.nan
        out.setdefault("cells", []).append(entry)
    failures = [r for r in rows if r.get("error")]
    out["replication_errors"] = len(failures)
    out["cell_errors"] = errors
    out["schema_version"] = SCHEMA_VERSION
    out["spec"] = spec.to_json()
    return out


def run_experiment(spec: ExperimentSpec, chunk: int = 50):
    """Run the grid; return ``(rows, summary)`` and write CSV/JSON when ``out_dir`` is set.

    Infeasible cells are reported once in ``summary["cell_errors"]`` and skipped;
    failures inside a replication become rows with a non-empty ``error`` field.
    """
    errors = []
    for cell in spec.cells():
        msg = _cell_error(spec, cell)
        if msg is not None:
            errors.append({"cell": cell[0], "theta": cell[5], "L": cell[6], "p": cell[7], "n": cell[4], "error": msg})
    units = []
    for gid in range(len(spec.groups())):
        for start in range(0, spec.n_sim, chunk):
            units.append((spec, gid, tuple(range(start, min(spec.n_sim, start + chunk)))))
    if spec.workers > 1 and len(units) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            parts = list(pool.map(_run_unit, units))
    else:
        parts = [_run_unit(u) for u in units]
    rows = [r for part in parts for r in part]
    summary = summarize(rows, spec, errors)
    if spec.out_dir is not None:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        write_rows(rows, out / "replications.csv", _columns(spec))
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
    return rows, summary


def write_rows(rows, path, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(row.get(k, "")) for k in columns})
