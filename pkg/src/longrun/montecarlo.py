"""Size and power experiments for the tests in this package.

Eight data-generating processes: six regression designs (M1-M6) covering
stationary, segmented locally stationary and contaminated errors, one
forecast-comparison design (M7) feeding the Diebold-Mariano test, and one
forecast-breakdown design (M8) feeding the Giacomini-Rossi test. The
runner tallies rejection rates at the 5 percent level for any subset of
the six estimator columns and reports a Monte Carlo standard error for
every cell.

Determinism contract: replication i draws from a generator seeded with
base_seed XOR i, and cell tallies are integer sums over replications, so
reports are identical for any worker count. Wall-clock time is kept out
of the serialized output unless explicitly requested.
"""
from __future__ import annotations

import json
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .baselines import (
    andrews_hac,
    kvb_fixed_b,
    load_fixed_b_critical_values,
    nw_hac,
)
from .dkhac import dk_hac_auto
from .hartests import dm_test, gr_test, ols_fit, t_test
from .kernels import lag_kernel, time_kernel

__all__ = [
    "MODELS",
    "ESTIMATORS",
    "DgpSpec",
    "SimulationReport",
    "generate",
    "run_experiment",
]

MODELS = ("M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8")
ESTIMATORS = ("dkhac", "nw", "nw-pw", "andrews", "andrews-pw", "kvb")

NOMINAL_LEVEL = 0.05

# Out-of-sample lengths for the forecast-breakdown design, keyed by the
# full sample size; other sizes fall back to a 40 percent training split.
_GR_SPLIT = {400: 160, 800: 420}


@dataclass(frozen=True)
class DgpSpec:
    """One simulation design: model id, sample size, alternative magnitude.

    delta = 0 is the null. T is the full sample clock; for M7 the loss
    series has length T/2 - 1 and for M8 it is T minus the training split,
    matching how the designs are usually tabulated.
    """

    model: str
    T: int
    delta: float = 0.0

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODELS}")
        if self.T < 64:
            raise ValueError("T must be at least 64")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")
        if self.model == "M3":
            warnings.warn(
                "M3: the stated range of rho_t peaks at 0.8071 but the formula's "
                "maximum is 0.8011; the formula is used as written",
                UserWarning,
                stacklevel=2,
            )
        elif self.model in ("M5", "M6"):
            warnings.warn(
                f"{self.model}: the stated rho_t range starts at 0 but the formula "
                "never reaches 0 on its segments; the formula is used as written",
                UserWarning,
                stacklevel=2,
            )

    @property
    def n_losses(self) -> int:
        """Length of the loss/surprise-loss series for M7/M8; 0 otherwise."""
        if self.model == "M7":
            return self.T - 1 - self.T // 2
        if self.model == "M8":
            return self.T - _GR_SPLIT.get(self.T, int(0.4 * self.T))
        return 0


def _ar1_path(rng, rho: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """e_t = rho_t e_{t-1} + sig_t u_t with e_0 from the frozen law at t=1."""
    r0 = rho[0]
    if abs(r0) < 1.0:
        e0 = sig[0] / math.sqrt(1.0 - r0 * r0) * rng.standard_normal()
    else:
        e0 = 0.0
    u = rng.standard_normal(rho.shape[0])
    zeros = np.zeros_like(rho)
    return _backend.tvar_recursion(rho, sig, zeros, zeros, u, e0)


def _const(T: int, value: float) -> np.ndarray:
    return np.full(T, value, dtype=np.float64)


def _m3_rho(T: int) -> np.ndarray:
    t = np.arange(1, T + 1, dtype=np.float64)
    rho = np.maximum(0.0, -np.cos(1.5 - np.cos(5.0 * t / T)))
    rho[t >= 4.0 * T / 5.0] = 0.9
    return rho


def _design(x: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones_like(x), x])


def _gen_m1(T, delta, rng):
    x = 1.0 + rng.standard_normal(T)
    e = _ar1_path(rng, _const(T, 0.5), _const(T, math.sqrt(0.5)))
    y = delta + x + e
    return {"y": y, "X": _design(x), "coef_index": 0, "beta0": (0.0, 1.0)}


def _gen_m2(T, delta, rng):
    x = 1.0 + rng.standard_normal(T)
    e = _ar1_path(rng, _const(T, 0.8), _const(T, 1.0))
    y = delta * x + e
    return {"y": y, "X": _design(x), "coef_index": 1, "beta0": (0.0, 0.0)}


def _gen_m3(T, delta, rng):
    x0 = rng.standard_normal() / math.sqrt(1.0 - 0.16)
    ux = rng.standard_normal(T)
    zeros = np.zeros(T)
    x = _backend.tvar_recursion(_const(T, 0.4), _const(T, 1.0), zeros, zeros, ux, x0)
    e = _ar1_path(rng, _m3_rho(T), _const(T, 1.0))
    y = delta * x + e
    return {"y": y, "X": _design(x), "coef_index": 1, "beta0": (0.0, 0.0)}


def _gen_m4(T, delta, rng):
    x = 1.0 + rng.standard_normal(T)
    w = 2.0 + rng.standard_normal(T)
    e = _ar1_path(rng, _m3_rho(T), _const(T, 1.0))
    t = np.arange(1, T + 1, dtype=np.float64)
    y = delta * x + w * (t >= 4.0 * T / 5.0) + e
    return {"y": y, "X": _design(x), "coef_index": 1, "beta0": (0.0, 0.0)}


def _gen_m5(T, delta, rng):
    x0 = 4.0 + rng.standard_normal() / math.sqrt(0.75)
    ux = rng.standard_normal(T)
    fours = _const(T, 4.0)
    x = _backend.tvar_recursion(_const(T, 0.5), _const(T, 1.0), fours, fours, ux, x0)
    t = np.arange(1, T + 1, dtype=np.float64)
    burst = (t >= T / 2.0) & (t <= T / 2.0 + T / 4.0)
    rho = np.where(burst, 0.2, 0.8 * np.cos(1.5 - np.cos(t / (2.0 * T))))
    sig = np.where(burst, 2.0, 1.0)
    e = _ar1_path(rng, rho, sig)
    drift = 1.5 * delta * (t - 4.5 * T / 5.0) / T
    coef = 1.0 + drift * (t >= 4.5 * T / 5.0)
    y = delta + coef * x + e
    return {"y": y, "X": _design(x), "coef_index": 0, "beta0": (0.0, 1.0)}


def _gen_m6(T, delta, rng):
    x = 1.0 + rng.standard_normal(T)
    t = np.arange(1, T + 1, dtype=np.float64)
    first = (t >= T / 2.0) & (t <= T / 2.0 + 3.0)
    last = t >= T - 15.0
    rho = np.maximum(0.0, 0.3 * np.cos(1.5 - np.cos(t / (5.0 * T))))
    rho[first] = 0.99
    rho[last] = 0.9
    sig = np.where(first | last, 2.0, 1.0)
    e = _ar1_path(rng, rho, sig)
    y = delta * x + e
    return {"y": y, "X": _design(x), "coef_index": 1, "beta0": (0.0, 0.0)}


def _forecast_losses(y, reg, fit_span, loss_span):
    """Fit y on (1, reg) over fit_span, return squared errors over loss_span."""
    lo, hi = fit_span
    fit = ols_fit(y[lo:hi], _design(reg[lo:hi]))
    b0, b1 = fit.beta_hat
    lo, hi = loss_span
    return (y[lo:hi] - b0 - b1 * reg[lo:hi]) ** 2


def _gen_m7(T, delta, rng):
    """Two competing one-step forecasts of an AR-error regression.

    The true input enters lagged, so the series x0, x1, x2 carry one extra
    leading draw. Under the null both competitors use irrelevant predictors;
    under the alternative the first uses the true predictor and the second a
    noisy copy whose level shifts by delta after three quarters of the
    sample. In-sample estimation uses the first half; losses run from there
    to T-1.
    """
    x0 = 1.0 + rng.standard_normal(T + 1)
    e = _ar1_path(rng, _const(T, 0.3), _const(T, 1.0))
    y = 1.0 + x0[:T] + e  # y_t = 1 + x0_{t-1} + e_t on the 1-based clock
    if delta == 0.0:
        r1 = 1.0 + rng.standard_normal(T + 1)[:T]
        r2 = 1.0 + rng.standard_normal(T + 1)[:T]
    else:
        u2 = rng.standard_normal(T)
        tt = np.arange(1, T + 1, dtype=np.float64)
        r1 = x0[:T]
        r2 = x0[:T] + u2 + delta * (tt > 3.0 * T / 4.0)
    half = T // 2
    loss1 = _forecast_losses(y, r1, (0, half), (half, T - 1))
    loss2 = _forecast_losses(y, r2, (0, half), (half, T - 1))
    return {"loss1": loss1, "loss2": loss2}


def _gen_m8(T, delta, rng):
    """Fixed-scheme forecast breakdown: level-and-slope shift after 0.8 T."""
    if delta == 0.0:
        x = 1.0 + math.sqrt(1.5) * rng.standard_normal(T + 1)
    else:
        x = 1.5 + rng.standard_normal(T + 1)
    e = _ar1_path(rng, _const(T, 0.3), _const(T, 1.0))
    tt = np.arange(1, T + 1, dtype=np.float64)
    y = 1.0 + x[:T] + delta * x[:T] * (tt > 0.8 * T) + e
    t_m = _GR_SPLIT.get(T, int(0.4 * T))
    fit = ols_fit(y[:t_m], _design(x[:t_m]))
    in_losses = fit.residuals**2
    b0, b1 = fit.beta_hat
    out_losses = (y[t_m:] - b0 - b1 * x[t_m:T]) ** 2
    return {"in_losses": in_losses, "out_losses": out_losses}


_GENERATORS = {
    "M1": _gen_m1,
    "M2": _gen_m2,
    "M3": _gen_m3,
    "M4": _gen_m4,
    "M5": _gen_m5,
    "M6": _gen_m6,
    "M7": _gen_m7,
    "M8": _gen_m8,
}


def generate(spec: DgpSpec, seed: int) -> dict:
    """Draw one dataset for the given design.

    Regression designs return y, the T x 2 design matrix, the tested
    coefficient index and the null coefficient vector. M7 returns the two
    competing loss series; M8 returns in-sample and out-of-sample losses.
    Draw order within a replication is fixed (regressors, then the error
    start value, then error innovations, then any contamination draws), so
    a given (spec, seed) pair always yields the same dataset.
    """
    rng = np.random.default_rng(seed)
    return _GENERATORS[spec.model](spec.T, spec.delta, rng)


# --- estimator column wiring -------------------------------------------------

_QS = lag_kernel("qs")
_EPAN = time_kernel("epanechnikov")

_CV_CACHE: dict = {}


def _fixed_b_cv(family: str):
    if family not in _CV_CACHE:
        _CV_CACHE[family] = load_fixed_b_critical_values(family)
    return _CV_CACHE[family]


def _score_lrv(name: str, scores: np.ndarray):
    """LRV of regression scores plus the matching critical-value source."""
    p = scores.shape[1]
    if name == "dkhac":
        return dk_hac_auto(scores, _QS, _EPAN, p_model=p, intercept_col=0), "normal"
    if name == "nw":
        return nw_hac(scores), "normal"
    if name == "nw-pw":
        return nw_hac(scores, prewhiten=True), "normal"
    if name == "andrews":
        return andrews_hac(scores), "normal"
    if name == "andrews-pw":
        return andrews_hac(scores, prewhiten=True), "normal"
    if name == "kvb":
        est, cvs = kvb_fixed_b(scores, family="t", critical_values=_fixed_b_cv("t"))
        return est, cvs
    raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")


def _series_lrv_method(name: str):
    """lrv_method callable for dm_test/gr_test, for one estimator column."""
    if name == "dkhac":
        return lambda v: dk_hac_auto(v, _QS, _EPAN)
    if name == "nw":
        return nw_hac
    if name == "nw-pw":
        return lambda v: nw_hac(v, prewhiten=True)
    if name == "andrews":
        return andrews_hac
    if name == "andrews-pw":
        return lambda v: andrews_hac(v, prewhiten=True)
    if name == "kvb":
        cvs = _fixed_b_cv("location")
        return lambda v: kvb_fixed_b(v, family="location", critical_values=cvs)
    raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")


def _one_replication(spec: DgpSpec, seed: int, estimators) -> tuple[np.ndarray, np.ndarray]:
    """Rejection and failure indicators (0/1 per estimator) for one draw."""
    n = len(estimators)
    reject = np.zeros(n, dtype=np.int64)
    fail = np.zeros(n, dtype=np.int64)
    try:
        data = generate(spec, seed)
    except (ValueError, np.linalg.LinAlgError):
        # a degenerate draw (for M7/M8 the in-sample fit is part of the
        # design) sinks every cell of this replication
        fail[:] = 1
        return reject, fail
    if spec.model == "M7":
        for i, name in enumerate(estimators):
            try:
                res = dm_test(data["loss1"], data["loss2"], _series_lrv_method(name))
                reject[i] = res.reject
            except (ValueError, np.linalg.LinAlgError):
                fail[i] = 1
        return reject, fail
    if spec.model == "M8":
        for i, name in enumerate(estimators):
            try:
                res = gr_test(data["in_losses"], data["out_losses"], _series_lrv_method(name))
                reject[i] = res.reject
            except (ValueError, np.linalg.LinAlgError):
                fail[i] = 1
        return reject, fail
    try:
        fit = ols_fit(data["y"], data["X"])
    except ValueError:
        fail[:] = 1
        return reject, fail
    r = data["coef_index"]
    beta0_r = data["beta0"][r]
    for i, name in enumerate(estimators):
        try:
            est, cv_source = _score_lrv(name, fit.scores)
            res = t_test(fit, r, beta0_r, est, cv_source, NOMINAL_LEVEL)
            reject[i] = res.reject
        except (ValueError, np.linalg.LinAlgError):
            fail[i] = 1
    return reject, fail


def _simulate_chunk(args) -> tuple[np.ndarray, np.ndarray]:
    model, T, delta, estimators, base_seed, start, stop = args
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        spec = DgpSpec(model, T, delta)
        reject = np.zeros(len(estimators), dtype=np.int64)
        fail = np.zeros(len(estimators), dtype=np.int64)
        for i in range(start, stop):
            r, f = _one_replication(spec, base_seed ^ i, estimators)
            reject += r
            fail += f
    return reject, fail


@dataclass(frozen=True)
class SimulationReport:
    """Rejection rates for one model at one sample size.

    cells is a list of dicts, one per (delta, estimator) pair in grid
    order, each carrying the rate, its Monte Carlo standard error
    sqrt(p(1-p)/n), and the rejection/failure counts. wall_clock_seconds
    is measured but excluded from serialization unless asked for, so that
    repeated runs produce identical files.
    """

    model: str
    T: int
    deltas: tuple
    estimators: tuple
    replications: int
    base_seed: int
    cells: tuple
    n_losses: int = 0
    wall_clock_seconds: float = field(default=0.0, compare=False)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "model": self.model,
            "T": self.T,
            "deltas": list(self.deltas),
            "estimators": list(self.estimators),
            "replications": self.replications,
            "base_seed": self.base_seed,
            "nominal_level": NOMINAL_LEVEL,
            "cells": [dict(c) for c in self.cells],
        }
        if self.n_losses:
            out["n_losses"] = self.n_losses
        if include_timing:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out

    def to_json(self, path=None, include_timing: bool = False):
        text = json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"
        if path is None:
            return text
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path

    def to_csv(self, path):
        import csv

        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["model", "T", "delta", "estimator", "rate", "mc_se", "rejections", "failures", "replications"]
            )
            for c in self.cells:
                rate = "" if c["rate"] is None else f"{c['rate']:.6f}"
                se = "" if c["mc_se"] is None else f"{c['mc_se']:.6f}"
                writer.writerow(
                    [self.model, self.T, repr(float(c["delta"])), c["estimator"], rate, se, c["rejections"], c["failures"], self.replications]
                )
        return path

    def rate(self, delta: float, estimator: str):
        for c in self.cells:
            if c["estimator"] == estimator and c["delta"] == delta:
                return c["rate"]
        raise KeyError(f"no cell for delta={delta}, estimator={estimator}")


def _make_cell(delta, name, rejections, failures, R):
    n_eff = R - int(failures)
    if n_eff > 0:
        rate = rejections / n_eff
        se = math.sqrt(rate * (1.0 - rate) / n_eff)
    else:
        rate = None
        se = None
    return {
        "delta": float(delta),
        "estimator": name,
        "rate": rate,
        "mc_se": se,
        "rejections": int(rejections),
        "failures": int(failures),
    }


def run_experiment(
    model: str,
    T: int,
    deltas=(0.0,),
    estimators=ESTIMATORS,
    R: int = 5000,
    base_seed: int = 1,
    workers: int = 1,
    chunk_size: int = 250,
) -> SimulationReport:
    """Tally 5 percent rejection rates over R replications per delta.

    Replication i uses seed base_seed XOR i, and cells are integer sums
    over replications, so the report does not depend on workers or
    chunk_size. A replication that fails inside one estimator is dropped
    from that cell only; its failure count is reported alongside.
    """
    if R < 100:
        raise ValueError("R must be at least 100")
    estimators = tuple(estimators)
    if not estimators:
        raise ValueError("estimator selection is empty")
    for name in estimators:
        if name not in ESTIMATORS:
            raise ValueError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
    deltas = tuple(float(d) for d in deltas)
    spec0 = DgpSpec(model, T, deltas[0])
    if workers < 1:
        raise ValueError("workers must be at least 1")
    if any(name == "kvb" for name in estimators):
        _fixed_b_cv("t")
        _fixed_b_cv("location")
    t0 = time.perf_counter()
    cells = []
    for delta in deltas:
        bounds = list(range(0, R, chunk_size)) + [R]
        tasks = [
            (model, T, delta, estimators, base_seed, lo, hi)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        if workers == 1:
            parts = [_simulate_chunk(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_simulate_chunk, tasks))
        reject = sum(p[0] for p in parts)
        fail = sum(p[1] for p in parts)
        for i, name in enumerate(estimators):
            cells.append(_make_cell(delta, name, reject[i], fail[i], R))
    wall = time.perf_counter() - t0
    return SimulationReport(
        model, T, deltas, estimators, R, base_seed, tuple(cells), spec0.n_losses, wall
    )
