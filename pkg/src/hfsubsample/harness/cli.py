"""Command line interface.

Exit codes: 0 on success, 2 for input errors, 3 for infeasible configurations.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import warnings

import numpy as np

from ..core import PowerSpec, log_returns
from ..errors import InfeasibleConfigError, InputError, HFSubsampleError
from ..inference import CONSTVOL_SPEC, JUMP_SPEC, const_vol_test, jump_test
from ..preavg import WeightScheme, preavg_bipower
from ..simulate import HestonConfig, NoiseConfig, add_noise, rng_stream, simulate_heston
from ..subsample import SubsampleConfig, subsample_cov_bipower, subsample_cov_noisy, subsample_cov_truncated
from ..variation import TruncationRule, bipower_variation, truncated_bipower_variation
from .experiment import ExperimentSpec, run_experiment
from .io import export_csv, ingest_csv
from .report import load_rows, write_report

EXIT_INPUT = 2
EXIT_INFEASIBLE = 3


def _floats(text):
    return [float(v) for v in str(text).split(",") if v.strip()]


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def _emit(payload, out):
    text = json.dumps({k: _jsonable(v) for k, v in payload.items()}, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _corrections(args) -> bool:
    return args.corrections == "on"


def _add_common(p, *, spec_default=("2", "0")):
    p.add_argument("--q", default=spec_default[0], help="comma separated powers of the current return")
    p.add_argument("--r", default=spec_default[1], help="comma separated powers of the next return")
    p.add_argument("--theta", type=float, default=None, help="pre-averaging window constant (noisy data)")
    p.add_argument("--out", default=None, help="output path (stdout when omitted)")


def _cov_payload(cov):
    return {
        "matrix": cov.matrix,
        "min_eigenvalue": cov.min_eigenvalue,
        "condition_number": cov.condition_number,
        "estimator_id": cov.estimator_id,
        "effective_window": cov.effective_window,
    }


def cmd_simulate(args):
    hcfg = HestonConfig(n=args.n, seed=args.seed, model=args.model)
    rng = rng_stream(args.seed, 0)
    path = simulate_heston(hcfg, rng)
    if args.noise == "general":
        ncfg = NoiseConfig("hetero_ma1", zeta=args.zeta, gamma=args.gamma)
    elif args.noise == "iid":
        ncfg = NoiseConfig("iid", omega2=args.gamma ** 2 * path.iv / args.n)
    else:
        ncfg = NoiseConfig("none")
    y = add_noise(path.prices, ncfg, rng, path.variance)
    out = args.out or "paths.csv"
    export_csv(out, np.exp(y.values))
    print(json.dumps({"out": str(out), "iv": path.iv, "iq": path.iq, "n": args.n}))


def cmd_estimate(args):
    prices = ingest_csv(args.file)
    spec = PowerSpec(_floats(args.q), _floats(args.r))
    if args.theta is not None:
        scheme = WeightScheme.from_theta(args.theta, prices.n)
        est = preavg_bipower(prices, spec, scheme)
    elif args.alpha is not None:
        est = truncated_bipower_variation(log_returns(prices), spec, TruncationRule(args.alpha, args.omega_check))
    else:
        est = bipower_variation(log_returns(prices), spec)
    _emit({"values": est.values, "kind": est.kind, "n": est.n, "spec": str(spec)}, args.out)


def cmd_subsample(args):
    prices = ingest_csv(args.file)
    spec = PowerSpec(_floats(args.q), _floats(args.r))
    on = _corrections(args)
    if args.theta is not None:
        scheme = WeightScheme.from_theta(args.theta, prices.n)
        cov = subsample_cov_noisy(prices, spec, scheme, SubsampleConfig.noisy(args.L, args.p, corrections=on))
    else:
        cfg = SubsampleConfig(args.L, args.p, apply_L_correction=on)
        if args.alpha is not None:
            cov = subsample_cov_truncated(log_returns(prices), spec, TruncationRule(args.alpha, args.omega_check), cfg)
        else:
            cov = subsample_cov_bipower(log_returns(prices), spec, cfg)
    _emit(_cov_payload(cov), args.out)


def cmd_test(args):
    prices = ingest_csv(args.file)
    theta = 1.0 if args.theta is None else args.theta
    scheme = WeightScheme.from_theta(theta, prices.n)
    cfg = SubsampleConfig.noisy(args.L, args.p, corrections=_corrections(args))
    if args.kind == "jumps":
        cov = subsample_cov_noisy(prices, JUMP_SPEC, scheme, cfg)
        res = jump_test(prices, scheme, cov, log_form=args.log_form)
    else:
        cov = subsample_cov_noisy(prices, CONSTVOL_SPEC, scheme, cfg)
        res = const_vol_test(prices, scheme, cov)
    _emit(res.as_dict(), args.out)


def cmd_mc(args):
    spec = ExperimentSpec(
        models=tuple(args.model.split(",")),
        noises=tuple(args.noise.split(",")),
        ns=tuple(int(v) for v in _floats(args.n)),
        thetas=tuple(_floats(args.theta)),
        Ls=tuple(int(v) for v in _floats(args.L)),
        ps=tuple(int(v) for v in _floats(args.p)),
        q=tuple(_floats(args.q)),
        r=tuple(_floats(args.r)),
        estimators=tuple(args.estimators.split(",")),
        n_sim=args.n_sim,
        seed=args.seed,
        corrections=_corrections(args),
        workers=args.workers,
        out_dir=args.out or "mc_out",
    )
    _, summary = run_experiment(spec)
    print(json.dumps({"out": spec.out_dir, "cells": len(summary.get("cells", [])),
                      "cell_errors": len(summary["cell_errors"])}))


def cmd_report(args):
    rows = load_rows(args.input)
    table, written = write_report(rows, args.out or "report")
    print(json.dumps({"groups": len(table), "kde_files": len(written)}))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hfsub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a noisy Heston price path to CSV")
    p.add_argument("--n", type=int, default=23400)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model", choices=("SV", "BM"), default="SV")
    p.add_argument("--noise", choices=("general", "iid", "none"), default="general")
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--zeta", type=float, default=-0.4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="point estimates from a price CSV")
    p.add_argument("file")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=None, help="truncation level constant")
    p.add_argument("--omega-check", type=float, default=0.49, dest="omega_check")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("subsample", help="subsampling covariance estimate with diagnostics")
    p.add_argument("file")
    _add_common(p, spec_default=("2,1", "0,1"))
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--omega-check", type=float, default=0.49, dest="omega_check")
    p.add_argument("--corrections", choices=("on", "off"), default="on")
    p.set_defaults(func=cmd_subsample)

    p = sub.add_parser("test", help="jump or constant-volatility test on a noisy price CSV")
    p.add_argument("kind", choices=("jumps", "constvol"))
    p.add_argument("file")
    p.add_argument("--theta", type=float, default=1.0)
    p.add_argument("--L", type=int, default=15)
    p.add_argument("--p", type=int, default=10)
    p.add_argument("--log-form", action="store_true", dest="log_form")
    p.add_argument("--corrections", choices=("on", "off"), default="on")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("mc", help="Monte Carlo experiment over a grid")
    p.add_argument("--model", default="SV")
    p.add_argument("--noise", default="general")
    p.add_argument("--n", default="23400")
    p.add_argument("--theta", default="1")
    p.add_argument("--L", default="15")
    p.add_argument("--p", default="10")
    p.add_argument("--q", default="2,1")
    p.add_argument("--r", default="0,1")
    p.add_argument("--estimators", default="subsample,pv,observed_avar")
    p.add_argument("--n-sim", type=int, default=100, dest="n_sim")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corrections", choices=("on", "off"), default="on")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mc)

    p = sub.add_parser("report", help="aggregate a replication CSV into tables and density curves")
    p.add_argument("input")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            args.func(args)
    except InfeasibleConfigError as exc:
        print(f"infeasible configuration: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InputError, HFSubsampleError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
