from __future__ import annotations

import csv
import json
import math
import shutil
import subprocess

import numpy as np
import pytest
from scipy.stats import norm

from hfsubsample.core import PowerSpec, log_returns
from hfsubsample.errors import NonMonotoneTime, NonPositivePrice, ParseError, TooFewSamples
from hfsubsample.harness import ExperimentSpec, export_csv, ingest_csv, kde, read_price_csv, run_experiment
from hfsubsample.harness.cli import main
from hfsubsample.harness.kde import bandwidth
from hfsubsample.harness.report import load_rows, write_report
from hfsubsample.preavg import WeightScheme, preavg_bipower
from hfsubsample.subsample import SubsampleConfig, subsample_cov_noisy
from hfsubsample.variation import bipower_variation


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_ingest_two_rows(tmp_path):
    p = write(tmp_path, "a.csv", "0,100\n1,101\n")
    np.testing.assert_array_equal(ingest_csv(p).values, np.log([100.0, 101.0]))


def test_ingest_header_single_column_and_duplicates(tmp_path):
    p = write(tmp_path, "b.csv", "time,price\n0,100\n1,101\n1,102\n2,103\n")
    t, x = read_price_csv(p)
    np.testing.assert_array_equal(t, [0, 1, 2])
    np.testing.assert_array_equal(x, [100, 102, 103])
    q = write(tmp_path, "c.csv", "100\n101\n99\n")
    np.testing.assert_array_equal(ingest_csv(q).values, np.log([100.0, 101.0, 99.0]))


def test_ingest_errors_report_line(tmp_path):
    rows = "\n".join(f"{i},{100 + i}" for i in range(6)) + "\n6,0\n"
    with pytest.raises(NonPositivePrice) as exc:
        ingest_csv(write(tmp_path, "d.csv", rows))
    assert exc.value.line == 7
    with pytest.raises(NonMonotoneTime) as exc:
        ingest_csv(write(tmp_path, "e.csv", "0,1\n2,1\n1,1\n"))
    assert exc.value.line == 3
    with pytest.raises(ParseError) as exc:
        ingest_csv(write(tmp_path, "f.csv", "0,1\n1,abc\n"))
    assert exc.value.line == 2
    with pytest.raises(ParseError):
        ingest_csv(write(tmp_path, "g.csv", "0,1\n"))


def test_export_ingest_round_trip(tmp_path, rng):
    prices = np.exp(np.cumsum(rng.standard_normal(23401)) * 1e-3) * 50
    path = export_csv(tmp_path / "r.csv", prices)
    _, back = read_price_csv(path)
    np.testing.assert_array_equal(back, prices)
    np.testing.assert_array_equal(ingest_csv(path).values, np.log(prices))


def test_bandwidth_and_normalization(rng):
    x = rng.standard_normal(10_000)
    x = (x - x.mean()) / x.std(ddof=1)
    assert bandwidth(x) == pytest.approx(1.06 * 10_000 ** -0.2, rel=1e-12)
    assert bandwidth(x) == pytest.approx(0.1679, abs=1e-4)
    grid = np.linspace(-10, 10, 4001)
    assert np.trapezoid(kde(x, grid), grid) == pytest.approx(1.0, abs=1e-3)
    with pytest.raises(TooFewSamples):
        kde([1.0], grid)


def test_kde_close_to_normal_density(rng):
    x = rng.standard_normal(10_000)
    grid = np.linspace(-4, 4, 401)
    assert np.max(np.abs(kde(x, grid) - norm.pdf(grid))) <= 0.02


SMALL = dict(ns=(2340,), thetas=(1.0,), Ls=(5,), ps=(3,), n_sim=3, seed=7)


def test_single_replication_row():
    rows, summary = run_experiment(ExperimentSpec(**{**SMALL, "n_sim": 1}))
    assert len(rows) == 3
    for r in rows:
        assert r["error"] == ""
        assert all(np.isfinite([r["v0"], r["v1"], r["min_eigenvalue"], r["z0"]]))
    assert {c["estimator"] for c in summary["cells"]} == {"subsample", "pv", "observed_avar"}


def test_experiment_is_deterministic(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    run_experiment(ExperimentSpec(**SMALL, out_dir=str(a)))
    run_experiment(ExperimentSpec(**SMALL, out_dir=str(b), workers=2), chunk=1)
    assert (a / "replications.csv").read_bytes() == (b / "replications.csv").read_bytes()
    assert (a / "summary.json").read_bytes() == (b / "summary.json").read_bytes()


def test_infeasible_cell_is_isolated():
    rows, summary = run_experiment(ExperimentSpec(**{**SMALL, "ps": (2, 3, 50)}))
    assert len(summary["cell_errors"]) == 2
    assert {e["p"] for e in summary["cell_errors"]} == {2, 50}
    assert {r["p"] for r in rows} == {3}
    assert len(rows) == 3 * 3 and not any(r["error"] for r in rows)


def test_subsampler_rows_are_psd():
    rows, _ = run_experiment(ExperimentSpec(**{**SMALL, "n_sim": 10, "estimators": ("subsample",)}))
    assert all(r["min_eigenvalue"] >= -1e-10 for r in rows)


def test_report_from_replications(tmp_path):
    out = tmp_path / "mc"
    run_experiment(ExperimentSpec(**SMALL, out_dir=str(out)))
    rows = load_rows(out / "replications.csv")
    table, written = write_report(rows, tmp_path / "rep")
    assert len(table) == 3
    assert (tmp_path / "rep" / "table.csv").exists() and written


@pytest.fixture
def price_file(tmp_path, rng):
    n = 3000
    x = np.cumsum(rng.standard_normal(n + 1)) * 1e-4 + 1e-5 * rng.standard_normal(n + 1)
    return export_csv(tmp_path / "p.csv", np.exp(4.0 + x))


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, (json.loads(out) if code == 0 and out.strip().startswith("{") else out)


def test_cli_estimate_parity(capsys, price_file):
    code, out = run_cli(capsys, "estimate", price_file, "--q", "2", "--r", "0")
    assert code == 0
    lib = bipower_variation(log_returns(ingest_csv(price_file)), PowerSpec([2], [0]))
    assert out["values"] == lib.values.tolist()
    code, out = run_cli(capsys, "estimate", price_file, "--q", "2,1", "--r", "0,1", "--theta", "1")
    prices = ingest_csv(price_file)
    lib = preavg_bipower(prices, PowerSpec([2, 1], [0, 1]), WeightScheme.from_theta(1.0, prices.n))
    assert out["values"] == lib.values.tolist()


def test_cli_subsample_parity(capsys, price_file):
    code, out = run_cli(capsys, "subsample", price_file, "--L", 5, "--p", 5, "--theta", 1)
    assert code == 0
    prices = ingest_csv(price_file)
    lib = subsample_cov_noisy(
        prices, PowerSpec([2, 1], [0, 1]), WeightScheme.from_theta(1.0, prices.n), SubsampleConfig.noisy(5, 5)
    )
    assert out["matrix"] == lib.matrix.tolist()
    assert out["min_eigenvalue"] >= -1e-10 and "effective_window" in out


def test_cli_tests_and_exit_codes(capsys, price_file, tmp_path):
    code, out = run_cli(capsys, "test", "jumps", price_file, "--L", 5, "--p", 5)
    assert code == 0 and 0 <= out["p_value_right"] <= 1
    code, out = run_cli(capsys, "test", "constvol", price_file, "--L", 5, "--p", 5)
    assert code == 0 and "statistic" in out
    assert run_cli(capsys, "subsample", price_file, "--L", 50, "--p", 10, "--theta", 1)[0] == 3
    assert run_cli(capsys, "estimate", tmp_path / "missing.csv")[0] == 2
    bad = write(tmp_path, "bad.csv", "0,1\n1,-1\n")
    assert run_cli(capsys, "estimate", bad)[0] == 2


def test_cli_simulate_mc_report(capsys, tmp_path):
    code, out = run_cli(capsys, "simulate", "--n", 500, "--seed", 3, "--out", tmp_path / "s.csv")
    assert code == 0 and ingest_csv(tmp_path / "s.csv").n == 500
    code, out = run_cli(
        capsys, "mc", "--n", 2340, "--L", 5, "--p", 3, "--n-sim", 2, "--seed", 1, "--out", tmp_path / "mc"
    )
    assert code == 0 and out["cells"] == 3
    code, out = run_cli(capsys, "report", tmp_path / "mc" / "replications.csv", "--out", tmp_path / "rep")
    assert code == 0 and out["groups"] == 3


@pytest.mark.skipif(shutil.which("hfsub") is None, reason="console script not installed")
def test_console_script():
    res = subprocess.run(["hfsub", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "subsample" in res.stdout
