"""Acceptance sweep: the shipped-quality bar for the whole package.

One test per criterion, ten in all. The first five re-run the size/power
experiments end to end at full scale (R = 5000, base seed 1), so this module
dominates suite runtime; each experiment lives in a module-scoped fixture so
its cost is paid once. The rest are structural properties: closed-form
constants, reduction to the classical estimator, consistency on a known
process, PSD/symmetry, and byte-level determinism.

Each test prints one observed-vs-required line and asserts all its legs at
once, so a failure message carries every violated bound.
"""
import json
import math
import warnings

import numpy as np
import pytest

import oracles
from longrun.baselines import andrews_hac, nw_hac
from longrun.cli import main
from longrun.dkhac import BandwidthPlan, dk_hac, dk_hac_auto
from longrun.kernels import kernel_constants, lag_kernel, time_kernel
from longrun.montecarlo import run_experiment

R = 5000
SEED = 1

QS = lag_kernel("qs")
EPAN = time_kernel("epanechnikov")


def _quiet_run(*args, **kwargs):
    # M3/M5 document their own pathologies with a UserWarning at spec
    # construction; that is expected here, not a finding.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return run_experiment(*args, **kwargs)


@pytest.fixture(scope="module")
def size_stationary():
    m1 = run_experiment("M1", 200, (0.0,), ("dkhac", "kvb"), R=R, base_seed=SEED)
    m2 = run_experiment("M2", 200, (0.0,), ("dkhac",), R=R, base_seed=SEED)
    return m1, m2


@pytest.fixture(scope="module")
def size_nonstationary():
    m3 = _quiet_run("M3", 200, (0.0,), ("dkhac", "kvb"), R=R, base_seed=SEED)
    m4 = run_experiment("M4", 200, (0.0,), ("kvb",), R=R, base_seed=SEED)
    return m3, m4


@pytest.fixture(scope="module")
def power_nonmonotone():
    return _quiet_run("M5", 200, (0.4, 1.6, 2.5), ("dkhac", "kvb"), R=R, base_seed=SEED)


@pytest.fixture(scope="module")
def power_forecast_breakdown():
    return run_experiment(
        "M8", 800, (0.8,), ("dkhac", "kvb", "andrews"), R=R, base_seed=SEED
    )


@pytest.fixture(scope="module")
def power_dm():
    return run_experiment("M7", 400, (5.0,), ("dkhac", "kvb"), R=R, base_seed=SEED)


def _check(failures, label, value, ok, req):
    if not ok:
        failures.append(f"{label} = {value:.4f}, required {req}")


def test_criterion_01_size_stationary(size_stationary):
    m1, m2 = size_stationary
    dk1 = m1.rate(0.0, "dkhac")
    kv1 = m1.rate(0.0, "kvb")
    dk2 = m2.rate(0.0, "dkhac")
    wall = m1.wall_clock_seconds + m2.wall_clock_seconds
    print(
        f"criterion 1: M1 dk {dk1:.4f} (0.086+-0.02), M1 kvb {kv1:.4f} "
        f"(0.057+-0.015), M2 dk {dk2:.4f} (0.054+-0.015), wall {wall:.0f}s (<600)"
    )
    failures = []
    _check(failures, "M1 dkhac size", dk1, abs(dk1 - 0.086) <= 0.02, "0.086 +- 0.02")
    _check(failures, "M1 kvb size", kv1, abs(kv1 - 0.057) <= 0.015, "0.057 +- 0.015")
    _check(failures, "M2 dkhac size", dk2, abs(dk2 - 0.054) <= 0.015, "0.054 +- 0.015")
    _check(failures, "wall clock", wall, wall < 600.0, "< 600 s")
    assert not failures, "; ".join(failures)


def test_criterion_02_size_nonstationary(size_nonstationary):
    m3, m4 = size_nonstationary
    dk3 = m3.rate(0.0, "dkhac")
    kv3 = m3.rate(0.0, "kvb")
    kv4 = m4.rate(0.0, "kvb")
    print(
        f"criterion 2: M3 dk {dk3:.4f} (0.063+-0.02), M3 kvb {kv3:.4f} "
        f"(0.003+-0.01), M4 kvb {kv4:.4f} (<=0.01)"
    )
    failures = []
    _check(failures, "M3 dkhac size", dk3, abs(dk3 - 0.063) <= 0.02, "0.063 +- 0.02")
    _check(failures, "M3 kvb size", kv3, abs(kv3 - 0.003) <= 0.01, "0.003 +- 0.01")
    _check(failures, "M4 kvb size", kv4, kv4 <= 0.01, "<= 0.01")
    assert not failures, "; ".join(failures)


def test_criterion_03_power_nonmonotonic(power_nonmonotone):
    rep = power_nonmonotone
    dk16 = rep.rate(1.6, "dkhac")
    kv16 = rep.rate(1.6, "kvb")
    kv04 = rep.rate(0.4, "kvb")
    kv25 = rep.rate(2.5, "kvb")
    print(
        f"criterion 3: dk(1.6) {dk16:.4f} (>=0.90), kvb(1.6) {kv16:.4f} (<=0.25), "
        f"kvb(2.5) {kv25:.4f} < kvb(0.4)+0.10 = {kv04 + 0.10:.4f}"
    )
    failures = []
    _check(failures, "dkhac power at 1.6", dk16, dk16 >= 0.90, ">= 0.90")
    _check(failures, "kvb power at 1.6", kv16, kv16 <= 0.25, "<= 0.25")
    _check(
        failures,
        "kvb power at 2.5",
        kv25,
        kv25 < kv04 + 0.10,
        f"< kvb(0.4)+0.10 = {kv04 + 0.10:.4f}",
    )
    assert not failures, "; ".join(failures)


def test_criterion_04_forecast_breakdown_power(power_forecast_breakdown):
    rep = power_forecast_breakdown
    dk = rep.rate(0.8, "dkhac")
    kv = rep.rate(0.8, "kvb")
    an = rep.rate(0.8, "andrews")
    print(
        f"criterion 4: dk {dk:.4f} (>=0.95), kvb {kv:.4f} (<=0.05), "
        f"andrews {an:.4f} (<=0.05)"
    )
    failures = []
    _check(failures, "dkhac power", dk, dk >= 0.95, ">= 0.95")
    _check(failures, "kvb power", kv, kv <= 0.05, "<= 0.05")
    _check(failures, "andrews power", an, an <= 0.05, "<= 0.05")
    assert not failures, "; ".join(failures)


def test_criterion_05_dm_power_collapse(power_dm):
    rep = power_dm
    dk = rep.rate(5.0, "dkhac")
    kv = rep.rate(5.0, "kvb")
    print(f"criterion 5: dk {dk:.4f} (>=0.90), kvb {kv:.4f} (<=0.05)")
    failures = []
    _check(failures, "dkhac power", dk, dk >= 0.90, ">= 0.90")
    _check(failures, "kvb power", kv, kv <= 0.05, "<= 0.05")
    assert not failures, "; ".join(failures)


def test_criterion_06_constant_consistency():
    cq = kernel_constants(QS, EPAN)
    c_inner = (4.0 * cq["K1q"] ** 2) ** (-0.2)
    c_b1 = c_inner * cq["F"] ** 0.2
    c_b2 = cq["H"] ** (-0.2) * cq["F"] ** 0.2
    print(
        f"criterion 6: {c_b2:.6f} vs 1.6786, {c_b1:.6f} vs 0.6828, "
        f"{c_inner:.6f} vs 0.6584 (all within 5e-4)"
    )
    assert abs(c_b2 - 1.6786) < 5e-4
    assert abs(c_b1 - 0.6828) < 5e-4
    assert abs(c_inner - 0.6584) < 5e-4
    # and the inner constant really is built from the QS curvature value
    assert cq["K1q"] == pytest.approx(18.0 * math.pi**2 / 125.0, rel=1e-15)


def test_criterion_07_single_block_equivalence():
    rng = np.random.default_rng(SEED)
    uniform = time_kernel("uniform")
    kernels = [lag_kernel(n) for n in ("qs", "bartlett", "parzen")]
    worst = 0.0
    for i in range(50):
        T = int(rng.integers(36, 120))
        p = int(rng.integers(1, 4))
        X = rng.standard_normal((T, p))
        k1 = kernels[i % 3]
        b1 = float(rng.uniform(0.05, 0.9))
        plan = BandwidthPlan(b1=b1, b2=1.0, n_T=T)
        got = np.atleast_2d(dk_hac(X, k1, uniform, plan).J)
        want = np.array(oracles.classical_hac_direct(X.tolist(), k1, b1))
        worst = max(worst, float(np.max(np.abs(got - want))))
    print(f"criterion 7: max abs deviation {worst:.3e} over 50 series (<1e-10)")
    assert worst < 1e-10


def test_criterion_08_population_lrv_recovery():
    # AR(1) with a = 0.5 and innovation variance 0.5 has long-run variance
    # 0.5 / (1 - 0.5)^2 = 2.0 exactly.
    a, sig = 0.5, math.sqrt(0.5)
    n_reps, T = 1000, 2000
    rng = np.random.default_rng(SEED)
    v = np.empty((n_reps, T))
    v[:, 0] = rng.standard_normal(n_reps) * sig / math.sqrt(1.0 - a * a)
    shocks = rng.standard_normal((n_reps, T - 1)) * sig
    for t in range(1, T):
        v[:, t] = a * v[:, t - 1] + shocks[:, t - 1]
    sums = {"dkhac": 0.0, "nw": 0.0, "andrews": 0.0}
    for i in range(n_reps):
        sums["dkhac"] += dk_hac_auto(v[i], QS, EPAN).value
        sums["nw"] += nw_hac(v[i]).value
        sums["andrews"] += andrews_hac(v[i]).value
    means = {k: s / n_reps for k, s in sums.items()}
    print(
        "criterion 8: mean estimates "
        + ", ".join(f"{k} {m:.4f}" for k, m in means.items())
        + " vs 2.0 (within 10%)"
    )
    failures = []
    for name, m in means.items():
        _check(failures, f"{name} mean", m, abs(m - 2.0) <= 0.2, "2.0 +- 0.2")
    assert not failures, "; ".join(failures)


def test_criterion_09_psd_symmetry():
    rng = np.random.default_rng(SEED)
    kernels = [lag_kernel(n) for n in ("qs", "bartlett", "parzen")]
    worst_sym = 0.0
    worst_eig = 0.0
    for _ in range(500):
        T = int(rng.integers(40, 140))
        p = int(rng.integers(1, 4))
        X = rng.standard_normal((T, p))
        X[1:] += 0.5 * X[:-1]  # mild coloring so off-diagonals are live
        for k1 in kernels:
            est = dk_hac_auto(X, k1, EPAN)
            J = np.atleast_2d(est.J)
            scale = float(np.max(np.abs(J)))
            worst_sym = max(worst_sym, float(np.max(np.abs(J - J.T))) / scale)
            tr = float(np.trace(J))
            worst_eig = max(worst_eig, -est.min_eigenvalue / max(tr, 1e-300))
    print(
        f"criterion 9: worst relative asymmetry {worst_sym:.3e} (<1e-12), "
        f"worst -mineig/trace {worst_eig:.3e} (<=1e-10) over 1500 estimates"
    )
    assert worst_sym < 1e-12
    assert worst_eig <= 1e-10


def test_criterion_10_determinism(tmp_path):
    configs = ((1, 250), (2, 250), (3, 61), (2, 17))
    texts = [
        run_experiment(
            "M1", 64, (0.0, 0.5), ("nw", "kvb"), R=200,
            base_seed=SEED, workers=w, chunk_size=c,
        ).to_json()
        for w, c in configs
    ]
    assert all(t == texts[0] for t in texts[1:])

    # the tables command end to end, files byte-identical across workers
    outputs = []
    for workers in (1, 2):
        d = tmp_path / f"w{workers}"
        rc = main(
            [
                "tables", "--tables", "Power M1", "--T", "200",
                "--estimators", "nw", "--R", "100",
                "--out-dir", str(d), "--workers", str(workers),
            ]
        )
        assert rc == 0
        outputs.append(
            (
                (d / "table_power-m1.csv").read_bytes(),
                (d / "tables_summary.json").read_bytes(),
            )
        )
    assert outputs[0] == outputs[1]
    json.loads(outputs[0][1])  # summary stays well-formed JSON
    print("criterion 10: simulate and tables outputs byte-identical across workers")
