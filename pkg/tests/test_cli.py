"""End-to-end tests of the command line interface.

Everything goes through main(argv) with temp directories; exit codes follow
the documented contract (0 ok, 2 usage, 3 estimation failure, 4 cache
failure) and the JSON reports must round-trip back into estimate objects.
"""
import csv
import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from longrun.baselines import load_fixed_b_critical_values, nw_hac
from longrun.cli import (
    EXIT_CACHE,
    EXIT_ESTIMATION,
    EXIT_OK,
    EXIT_USAGE,
    lrv_from_dict,
    lrv_to_dict,
    main,
)
from longrun.dkhac import BandwidthPlan, dk_hac, dk_hac_auto
from longrun.kernels import lag_kernel, time_kernel
from longrun.montecarlo import run_experiment


def _write_csv(path, data, header=None):
    data = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if data.shape[0] == 1:
        data = data.T
    header = header or [f"s{i}" for i in range(data.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(data.tolist())
    return str(path)


@pytest.fixture
def series_csv(tmp_path):
    rng = np.random.default_rng(31)
    v = np.empty(64)
    v[0] = rng.standard_normal()
    for t in range(1, 64):
        v[t] = 0.5 * v[t - 1] + rng.standard_normal()
    return _write_csv(tmp_path / "series.csv", v), v


# ---------------------------------------------------------------------------
# estimate


def test_estimate_writes_report_that_round_trips(series_csv, tmp_path):
    path, v = series_csv
    out = tmp_path / "est.json"
    rc = main(["estimate", path, "--estimator", "nw", "--out", str(out)])
    assert rc == EXIT_OK
    report = json.loads(out.read_text())
    assert report["columns"] == ["s0"]
    assert report["T"] == 64
    est = lrv_from_dict(report["estimate"])
    want = nw_hac(v)
    assert_allclose(est.J, want.J, rtol=1e-12)
    assert est.plan.b1 == want.plan.b1
    assert report["config"]["estimators"] == ["nw"]


def test_estimate_stdout_default_dkhac(series_csv, capsys):
    path, v = series_csv
    rc = main(["estimate", path, "--stdout"])
    assert rc == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["estimate"]["plan"]["source"] == "PlugIn"
    want = dk_hac_auto(v, lag_kernel("qs"), time_kernel("epanechnikov"))
    assert report["estimate"]["J"][0][0] == pytest.approx(want.value, rel=1e-12)
    assert report["estimate"]["psd"] is True
    assert report["estimate"]["diagnostics"]["b1"] == want.plan.b1


def test_estimate_bandwidth_overrides(series_csv, capsys):
    path, v = series_csv
    rc = main(["estimate", path, "--b1", "0.4", "--b2", "0.5", "--n-t", "16", "--stdout"])
    assert rc == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    plan = BandwidthPlan(b1=0.4, b2=0.5, n_T=16)
    want = dk_hac(v, lag_kernel("qs"), time_kernel("epanechnikov"), plan)
    assert report["estimate"]["J"][0][0] == pytest.approx(want.value, rel=1e-12)
    assert report["estimate"]["plan"]["source"] == "Predetermined"
    # overrides belong to dkhac only
    rc = main(["estimate", path, "--estimator", "nw", "--b1", "0.4", "--b2", "0.5"])
    assert rc == EXIT_ESTIMATION
    # half an override is a usage error
    assert main(["estimate", path, "--b1", "0.4"]) == EXIT_USAGE
    # out-of-range values are rejected by the plan
    assert main(["estimate", path, "--b1", "2.0", "--b2", "0.5"]) == EXIT_USAGE


def test_estimate_kvb_reports_critical_values(series_csv, capsys):
    path, _ = series_csv
    rc = main(["estimate", path, "--estimator", "kvb", "--stdout"])
    assert rc == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    cvs = report["fixed_b_critical_values"]
    assert cvs["0.95"] == pytest.approx(4.77516332820557, rel=1e-12)


def test_estimate_rejects_malformed_csv(tmp_path, capsys):
    short = _write_csv(tmp_path / "short.csv", np.arange(10.0))
    assert main(["estimate", short]) == EXIT_USAGE
    assert "32 data rows" in capsys.readouterr().err

    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n" + "1.0\n" * 40)
    assert main(["estimate", str(bad)]) == EXIT_USAGE
    assert "fields" in capsys.readouterr().err

    text = tmp_path / "text.csv"
    text.write_text("a\n" + "1.0\n" * 35 + "apple\n")
    assert main(["estimate", str(text)]) == EXIT_USAGE

    inf = tmp_path / "inf.csv"
    inf.write_text("a\n" + "1.0\n" * 35 + "inf\n")
    assert main(["estimate", str(inf)]) == EXIT_USAGE

    assert main(["estimate", str(tmp_path / "missing.csv")]) == EXIT_USAGE


def test_estimate_estimation_failure_exit_code(tmp_path):
    # zeros are a well-formed CSV but leave the fixed-b normalizer undefined
    zeros = _write_csv(tmp_path / "zeros.csv", np.zeros(40))
    assert main(["estimate", zeros, "--estimator", "kvb"]) == EXIT_ESTIMATION


def test_usage_errors_exit_two(series_csv):
    path, _ = series_csv
    assert main(["estimate", path, "--estimator", "white"]) == EXIT_USAGE
    assert main(["bogus-command"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE
    assert main(["--version"]) == EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def test_simulate_stdout_reproducible_across_workers(capsys):
    argv = [
        "simulate", "--model", "M1", "--T", "64", "--deltas", "0",
        "--estimators", "nw", "--R", "100", "--stdout",
    ]
    assert main(argv + ["--workers", "1"]) == EXIT_OK
    one = capsys.readouterr().out
    assert main(argv + ["--workers", "2"]) == EXIT_OK
    two = capsys.readouterr().out
    assert one == two
    report = json.loads(one)
    assert report["replications"] == 100
    assert report["cells"][0]["estimator"] == "nw"


def test_simulate_writes_files_matching_direct_run(tmp_path):
    rc = main(
        [
            "simulate", "--model", "M1", "--T", "64", "--deltas", "0,1",
            "--estimators", "nw,kvb", "--R", "100", "--seed", "9",
            "--out-dir", str(tmp_path),
        ]
    )
    assert rc == EXIT_OK
    data = json.loads((tmp_path / "sim_M1_T64.json").read_text())
    direct = run_experiment(
        "M1", 64, (0.0, 1.0), ("nw", "kvb"), R=100, base_seed=9
    )
    assert data == direct.to_dict()
    with open(tmp_path / "sim_M1_T64.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 1 + len(direct.cells)


def test_simulate_timing_flag(tmp_path):
    argv = [
        "simulate", "--model", "M1", "--T", "64", "--deltas", "0",
        "--estimators", "nw", "--R", "100", "--out-dir", str(tmp_path), "--timing",
    ]
    assert main(argv) == EXIT_OK
    data = json.loads((tmp_path / "sim_M1_T64.json").read_text())
    assert "wall_clock_seconds" in data


def test_simulate_usage_errors():
    base = ["simulate", "--model", "M1", "--T", "64", "--R", "100"]
    assert main(base + ["--deltas", "0,abc"]) == EXIT_USAGE
    assert main(base + ["--estimators", "nw,white"]) == EXIT_USAGE
    assert main(["simulate", "--model", "M1", "--T", "64", "--R", "50"]) == EXIT_USAGE
    assert main(["simulate", "--model", "M0", "--T", "64"]) == EXIT_USAGE
    assert main(base + ["--deltas", " , "]) == EXIT_USAGE


# ---------------------------------------------------------------------------
# config files


def test_config_file_splices_flags(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\ndeltas=0\nestimators=nw\nR=100\nstdout=--stdout\n")
    # booleans cannot come from config; keep it to valued flags
    cfg.write_text("# small run\ndeltas=0\nestimators=nw\nR=100\n")
    rc = main(
        ["simulate", "--model", "M1", "--T", "64", "--config", str(cfg), "--stdout"]
    )
    assert rc == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["replications"] == 100
    assert report["estimators"] == ["nw"]


def test_config_explicit_flags_win(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("R=5000\ndeltas=0\nestimators=nw\n")
    rc = main(
        [
            "simulate", "--model", "M1", "--T", "64", "--R", "100",
            "--config", str(cfg), "--stdout",
        ]
    )
    assert rc == EXIT_OK
    assert json.loads(capsys.readouterr().out)["replications"] == 100


def test_config_error_paths(tmp_path):
    assert main(["simulate", "--model", "M1", "--T", "64", "--config"]) == EXIT_USAGE
    missing = str(tmp_path / "nope.cfg")
    assert (
        main(["simulate", "--model", "M1", "--T", "64", "--config", missing])
        == EXIT_USAGE
    )
    bad = tmp_path / "bad.cfg"
    bad.write_text("this line has no equals sign\n")
    assert (
        main(["simulate", "--model", "M1", "--T", "64", "--config", str(bad)])
        == EXIT_USAGE
    )


# ---------------------------------------------------------------------------
# fixed-b cache and tables


def test_fixedb_cache_command(tmp_path):
    out = tmp_path / "cache.json"
    rc = main(["fixedb-cache", "--out", str(out), "--grid", "50", "--reps", "300"])
    assert rc == EXIT_OK
    cv = load_fixed_b_critical_values("t", path=out)
    assert cv.grid_points == 50 and cv.replications == 300
    rc = main(["fixedb-cache", "--out", str(out), "--grid", "-3", "--reps", "10"])
    assert rc == EXIT_CACHE


def test_tables_small_run(tmp_path):
    rc = main(
        [
            "tables", "--tables", "Power M1", "--T", "200",
            "--estimators", "nw", "--R", "100", "--out-dir", str(tmp_path),
        ]
    )
    assert rc == EXIT_OK
    summary = json.loads((tmp_path / "tables_summary.json").read_text())
    assert summary["replications"] == 100
    assert summary["n_cells"] == 4  # four deltas, one estimator
    assert 0 <= summary["n_flagged"] <= summary["n_cells"]
    with open(tmp_path / "table_power-m1.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 5
    assert rows[0][:6] == ["table", "label", "model", "T", "delta", "estimator"]
    for row in rows[1:]:
        assert row[8] != ""  # reference value always present


def test_tables_unknown_name_is_usage_error(tmp_path):
    rc = main(["tables", "--tables", "Power M99", "--out-dir", str(tmp_path)])
    assert rc == EXIT_USAGE


# ---------------------------------------------------------------------------
# serialization helpers


def test_lrv_dict_round_trip_with_schedule_and_diagnostics():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((48, 2))
    est = dk_hac_auto(X, lag_kernel("qs"), time_kernel("epanechnikov"), p_model=2)
    payload = lrv_to_dict(est)
    text = json.dumps(payload)  # must be JSON-serializable as is
    back = lrv_from_dict(json.loads(text))
    assert_allclose(back.J, est.J, rtol=0, atol=0)
    assert back.plan.b1 == est.plan.b1
    assert back.plan.b2_bar == est.plan.b2_bar
    assert back.dof_adjusted == est.dof_adjusted
    assert back.k1 is est.k1
    # per-block schedule survives the trip as a tuple (T=48, n_T=12 -> 4 blocks)
    plan = BandwidthPlan(b1=0.3, b2=(0.35, 0.45, 0.55, 0.65), n_T=12)
    est2 = dk_hac(X, lag_kernel("bartlett"), time_kernel("epanechnikov"), plan)
    back2 = lrv_from_dict(json.loads(json.dumps(lrv_to_dict(est2))))
    assert back2.plan.b2_schedule() == (0.35, 0.45, 0.55, 0.65)
