"""Classical long-run variance estimators used as comparison baselines.

Three families: the Bartlett-kernel estimator with the Newey-West (1994)
automatic truncation lag, the quadratic-spectral estimator with the Andrews
(1991) AR(1) plug-in bandwidth, and the fixed-b variant that sets the
Bartlett bandwidth equal to the sample size and pairs the resulting
normalizer with simulated nonstandard critical values (Kiefer, Vogelsang
and Bunzel 2000). The first two optionally prewhiten with a first-order
vector autoregression and recolor afterwards (Andrews and Monahan 1992).

Every constant here comes from those published recipes; nothing is tuned to
any particular data set. Critical values for the fixed-b test are simulated
and cached with their simulation metadata, never copied from tables.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import _backend
from .dkhac import BandwidthPlan, LrvEstimate, _lag_weights
from .kernels import lag_kernel, time_kernel

__all__ = [
    "FixedBCriticalValues",
    "UndefinedStatisticError",
    "nw_hac",
    "andrews_hac",
    "kvb_fixed_b",
    "simulate_fixed_b_critical_values",
    "generate_fixed_b_cache",
    "load_fixed_b_critical_values",
]

VAR_COEF_CLAMP = 0.97  # Andrews-Monahan singular-value cap for prewhitening

_CACHE_ENV = "LONGRUN_FIXEDB_CACHE"
_CACHE_RESOURCE = "fixedb_critical_values.json"
_DEFAULT_LEVELS = (0.90, 0.95, 0.99)
_DEFAULT_GRID = 2000
_DEFAULT_REPS = 200000
# Fixed simulation seeds; the two families use the same limiting functional
# but independent draws.
_FAMILY_SEEDS = {"t": 1299721, "location": 15485863}


class UndefinedStatisticError(ValueError):
    """The normalizer is identically zero, so no test statistic exists."""


def _as_matrix(V) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    return np.ascontiguousarray(V)


def _kernel_lrv(X: np.ndarray, kernel_name: str, b1: float) -> np.ndarray:
    """T^{-1} sum_{|j|<T} K(b1 j) sum_t V_t V_{t-j}' for the named lag kernel."""
    T = X.shape[0]
    w = _lag_weights(lag_kernel(kernel_name), b1, T)
    return _backend.kernel_weighted_quadratic(X, w) / T


def _wrap_estimate(J, kernel_name, b1, T, diagnostics=None) -> LrvEstimate:
    J = 0.5 * (J + J.T)
    plan = BandwidthPlan(b1=b1, b2=1.0, n_T=T, source="Predetermined")
    return LrvEstimate(
        J,
        plan,
        lag_kernel(kernel_name),
        time_kernel("uniform"),
        False,
        float(np.linalg.eigvalsh(J)[0]),
        diagnostics,
    )


def _var1_prewhiten(X: np.ndarray):
    """Fit V_t = A V_{t-1} + resid, cap A's singular values, return (resid, A, capped).

    The cap keeps (I - A) comfortably invertible for the recoloring step;
    0.97 is the customary choice.
    """
    Y = X[1:]
    Z = X[:-1]
    G = Z.T @ Z
    try:
        A = np.linalg.solve(G, Z.T @ Y).T
    except np.linalg.LinAlgError:
        A = (np.linalg.pinv(G) @ (Z.T @ Y)).T
    U, s, Vt = np.linalg.svd(A)
    capped = bool(np.any(s > VAR_COEF_CLAMP))
    if capped:
        s = np.minimum(s, VAR_COEF_CLAMP)
        A = U @ np.diag(s) @ Vt
    resid = Y - Z @ A.T
    return resid, A, capped


def _recolor(J_star: np.ndarray, A: np.ndarray) -> np.ndarray:
    p = A.shape[0]
    B = np.linalg.inv(np.eye(p) - A)
    return B @ J_star @ B.T


def _nw94_lag(X: np.ndarray) -> int:
    """Newey-West (1994) automatic truncation lag for the Bartlett kernel.

    Pilot window n = floor(4 (T/100)^{2/9}) on the summed series, growth
    exponent 1/3, constant 1.1447 from their Table II.
    """
    T = X.shape[0]
    xi = X.sum(axis=1)
    n = int(4.0 * (T / 100.0) ** (2.0 / 9.0))
    sig = np.empty(n + 1)
    for j in range(n + 1):
        sig[j] = float(xi[j:] @ xi[: T - j]) / T
    s0 = sig[0] + 2.0 * float(np.sum(sig[1:]))
    s1 = 2.0 * float(np.sum(np.arange(1, n + 1) * sig[1:]))
    if s0 == 0.0:
        return 0
    gamma = 1.1447 * ((s1 / s0) ** 2) ** (1.0 / 3.0)
    return min(int(gamma * T ** (1.0 / 3.0)), T - 1)


def nw_hac(V, auto: bool = True, prewhiten: bool = False, lag: int | None = None) -> LrvEstimate:
    """Bartlett-kernel estimate with the Newey-West (1994) automatic lag.

    With prewhiten a first-order VAR is fitted and removed first and the
    estimate is recolored through (I - A)^{-1}; the automatic lag is then
    chosen on the filtered series. Pass auto=False with an explicit lag to
    pin the truncation point (lag 0 gives the plain second-moment matrix).
    """
    X = _as_matrix(V)
    T = X.shape[0]
    if T < 16:
        raise ValueError("need T >= 16")
    diag = {"prewhitened": bool(prewhiten)}
    A = None
    if prewhiten:
        X, A, capped = _var1_prewhiten(X)
        diag["var_coef_capped"] = capped
    if auto:
        m = _nw94_lag(X)
    else:
        if lag is None:
            raise ValueError("auto=False requires an explicit lag")
        m = int(lag)
        if not 0 <= m < X.shape[0]:
            raise ValueError(f"lag {m} out of range")
    diag["lag"] = m
    J = _kernel_lrv(X, "bartlett", 1.0 / (m + 1))
    if prewhiten:
        J = _recolor(J, A)
    return _wrap_estimate(J, "bartlett", 1.0 / (m + 1), T, diag)


def _andrews_bandwidth(X: np.ndarray) -> float:
    """Andrews (1991) QS plug-in bandwidth from per-component AR(1) fits.

    alpha(2) pools 4 rho^2 sigma^4 / (1-rho)^8 against sigma^4 / (1-rho)^4
    with unit weights; S_T = 1.3221 (alpha(2) T)^{1/5}. Slopes are kept away
    from the unit root so the ratio stays finite.
    """
    T, p = X.shape
    num = 0.0
    den = 0.0
    for i in range(p):
        v = X[:, i]
        sxx = float(v[:-1] @ v[:-1])
        if sxx <= 0.0:
            continue
        rho = float(v[1:] @ v[:-1]) / sxx
        rho = min(max(rho, -VAR_COEF_CLAMP), VAR_COEF_CLAMP)
        resid = v[1:] - rho * v[:-1]
        s2 = float(resid @ resid) / (T - 1)
        num += 4.0 * rho**2 * s2**2 / (1.0 - rho) ** 8
        den += s2**2 / (1.0 - rho) ** 4
    if den <= 0.0:
        return 1.0, True
    alpha2 = num / den
    st = 1.3221 * (alpha2 * T) ** 0.2
    # S_T below 1 would ask for a bandwidth wider than the data; pin it.
    return (st, False) if st >= 1.0 else (1.0, True)


def andrews_hac(V, prewhiten: bool = False) -> LrvEstimate:
    """Quadratic-spectral estimate with the Andrews (1991) plug-in bandwidth.

    The prewhitened variant follows Andrews and Monahan (1992): VAR(1)
    filter with capped singular values, QS estimation on the residuals,
    then recoloring.
    """
    X = _as_matrix(V)
    T = X.shape[0]
    if T < 16:
        raise ValueError("need T >= 16")
    diag = {"prewhitened": bool(prewhiten)}
    A = None
    if prewhiten:
        X, A, capped = _var1_prewhiten(X)
        diag["var_coef_capped"] = capped
    st, floored = _andrews_bandwidth(X)
    diag["S_T"] = st
    diag["S_T_floored"] = floored
    J = _kernel_lrv(X, "qs", 1.0 / st)
    if prewhiten:
        J = _recolor(J, A)
    return _wrap_estimate(J, "qs", 1.0 / st, T, diag)


@dataclass(frozen=True)
class FixedBCriticalValues:
    """Simulated two-sided critical values for the b = 1 Bartlett normalizer.

    quantiles maps confidence level (1 - nominal size) to the critical
    value of |statistic|. The metadata pins the simulation so the numbers
    can be regenerated and checked.
    """

    family: str
    quantiles: dict
    grid_points: int
    replications: int
    seed: int

    def critical_value(self, level: float = 0.05) -> float:
        key = round(1.0 - level, 10)
        for q, v in self.quantiles.items():
            if abs(q - key) < 1e-9:
                return v
        raise KeyError(f"no cached critical value for nominal level {level}")


def simulate_fixed_b_critical_values(
    family: str = "t",
    grid_points: int = _DEFAULT_GRID,
    replications: int = _DEFAULT_REPS,
    seed: int | None = None,
    levels=_DEFAULT_LEVELS,
    chunk: int = 2000,
) -> FixedBCriticalValues:
    """Simulate quantiles of |W(1)| / sqrt(2 int_0^1 B(r)^2 dr), B a bridge.

    This is the limiting null distribution of both the regression t ratio
    and the scaled-mean (location) statistic when the normalizer is the
    full-bandwidth Bartlett estimator; the two families therefore share the
    functional and differ only in their seeds.
    """
    if family not in _FAMILY_SEEDS:
        raise ValueError(f"unknown family {family!r}; use 't' or 'location'")
    if seed is None:
        seed = _FAMILY_SEEDS[family]
    rng = np.random.default_rng(seed)
    n = grid_points
    out = np.empty(replications)
    done = 0
    while done < replications:
        m = min(chunk, replications - done)
        z = rng.standard_normal((m, n))
        W = np.cumsum(z, axis=1) / math.sqrt(n)
        w1 = W[:, -1]
        frac = np.arange(1, n + 1) / n
        bridge = W - w1[:, None] * frac[None, :]
        denom = 2.0 * np.mean(bridge**2, axis=1)
        out[done : done + m] = np.abs(w1) / np.sqrt(denom)
        done += m
    qs = {float(lv): float(np.quantile(out, lv)) for lv in levels}
    return FixedBCriticalValues(family, qs, n, replications, seed)


def generate_fixed_b_cache(path, grid_points=_DEFAULT_GRID, replications=_DEFAULT_REPS) -> dict:
    """Simulate both families and write the JSON cache; returns the payload."""
    payload = {"version": 1, "families": {}}
    for family in sorted(_FAMILY_SEEDS):
        cv = simulate_fixed_b_critical_values(family, grid_points, replications)
        payload["families"][family] = {
            "quantiles": {f"{q:.2f}": v for q, v in cv.quantiles.items()},
            "grid_points": cv.grid_points,
            "replications": cv.replications,
            "seed": cv.seed,
        }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def load_fixed_b_critical_values(family: str = "t", path=None) -> FixedBCriticalValues:
    """Load cached critical values; the packaged cache is the default source.

    Resolution order: explicit path, the LONGRUN_FIXEDB_CACHE environment
    variable, then the data file shipped with the package.
    """
    if path is None:
        path = os.environ.get(_CACHE_ENV)
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    else:
        ref = resources.files("longrun").joinpath("data").joinpath(_CACHE_RESOURCE)
        payload = json.loads(ref.read_text(encoding="utf-8"))
    try:
        entry = payload["families"][family]
    except KeyError:
        raise KeyError(f"cache has no family {family!r}") from None
    qs = {float(k): float(v) for k, v in entry["quantiles"].items()}
    return FixedBCriticalValues(
        family, qs, int(entry["grid_points"]), int(entry["replications"]), int(entry["seed"])
    )


def kvb_fixed_b(V, family: str = "t", critical_values: FixedBCriticalValues | None = None):
    """Full-bandwidth Bartlett normalizer plus its simulated critical values.

    The returned estimate is the Bartlett kernel sum with bandwidth equal to
    the sample size (weights 1 - |j|/T). It does not converge to the LRV;
    the matching tests stay valid because they compare against the
    simulated fixed-b distribution instead of the normal.
    """
    X = _as_matrix(V)
    T = X.shape[0]
    if T < 16:
        raise ValueError("need T >= 16")
    J = _kernel_lrv(X, "bartlett", 1.0 / T)
    if float(np.trace(J)) <= 0.0:
        raise UndefinedStatisticError("normalizer is zero; statistic undefined")
    if critical_values is None:
        critical_values = load_fixed_b_critical_values(family)
    elif critical_values.family != family:
        raise ValueError("supplied critical values are for a different family")
    est = _wrap_estimate(J, "bartlett", 1.0 / T, T, {"fixed_b": 1.0, "family": family})
    return est, critical_values
