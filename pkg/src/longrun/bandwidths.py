"""Data-dependent bandwidth selection for the double-kernel estimator.

The two bandwidths play different roles and are chosen in sequence. The
time-smoothing bandwidth b2 comes first, block by block, from the ratio of
two local-spectrum derivative proxies (d1, a fixed reference path, and d2,
estimated from tapered local autocovariances). Its average feeds the
lag-smoothing bandwidth b1 together with phi2, a ratio of local AR(1)
summaries across blocks. Degenerate inputs are floored rather than rejected
so that a plan always comes back; every floor or clamp that fired is listed
in the diagnostics.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from .dkhac import BandwidthPlan, local_autocov_hat
from .kernels import LagKernel, TimeKernel, kernel_constants

__all__ = [
    "LocalAr1Fit",
    "PlugInDiagnostics",
    "local_ar1_fit",
    "phi2_hat",
    "d1_hat",
    "d2_hat",
    "b2_hat",
    "b2_bar",
    "b1_hat",
    "auto_plan",
]

A1_CLAMP = 0.97
PHI2_FLOOR = 1e-6
D_FLOOR = 1e-8

# Default frequency grid for d1_hat: symmetric, endpoints at +-pi.
D1_GRID = (-math.pi, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0, math.pi)


@dataclass(frozen=True)
class LocalAr1Fit:
    """No-intercept AR(1) fit on a trailing window.

    sigma_hat is the square root of the residual sum of squares, not divided
    by the window length; every use downstream is a ratio in which the
    normalization cancels. degenerate marks a window whose lagged values
    were identically zero.
    """

    a1_hat: float
    sigma_hat: float
    window: tuple
    degenerate: bool = False


@dataclass(frozen=True)
class PlugInDiagnostics:
    """Everything the plug-in produced on the way to a plan."""

    phi2: float
    d1: tuple
    d2: tuple
    b2_schedule: tuple
    b2_bar: float
    b1: float
    n_T: int
    flags: tuple = ()

    def to_dict(self) -> dict:
        return {
            "phi2": self.phi2,
            "d1": list(self.d1),
            "d2": list(self.d2),
            "b2_schedule": [list(pair) for pair in self.b2_schedule],
            "b2_bar": self.b2_bar,
            "b1": self.b1,
            "n_T": self.n_T,
            "flags": list(self.flags),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def local_ar1_fit(v, t: int, n2t: int) -> LocalAr1Fit:
    """AR(1) slope and residual scale on the window of n2t observations ending at t.

    t is 1-based. Anchors earlier than the first full window fall back to
    the window [1, n2t]. The slope regresses v_j on v_{j-1} without
    intercept; sigma_hat is the root of the residual sum of squares.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    T = v.shape[0]
    if not 1 <= t <= T:
        raise ValueError(f"anchor t = {t} outside [1, {T}]")
    if not 2 <= n2t <= T:
        raise ValueError(f"window length {n2t} not in [2, {T}]")
    a = t - 1
    a1, sig = _backend.window_ar1_stats(v, np.array([a], dtype=np.int64), n2t)
    if a < n2t:
        window = (1, n2t)
        lagsq = v[0 : n2t - 1] ** 2
    else:
        window = (t - n2t + 1, t)
        lagsq = v[a - n2t : a] ** 2
    degenerate = not np.any(lagsq > 0.0)
    return LocalAr1Fit(float(a1[0]), float(sig[0]), window, degenerate)


def _clamped_ratios(v, anchors, n3t):
    """Per-anchor (sigma^2 a / (1-a)^4, sigma^2 / (1-a)^2) with the slope clamped."""
    a1, sig = _backend.window_ar1_stats(v, anchors, n3t)
    a1 = np.clip(a1, -A1_CLAMP, A1_CLAMP)
    s2 = sig**2
    num = s2 * a1 / (1.0 - a1) ** 4
    den = s2 / (1.0 - a1) ** 2
    return num, den


def phi2_hat(V, W=None, n3t: int | None = None) -> float:
    """Curvature summary of the local spectra, pooled across components.

    For each component with unit weight, local AR(1) fits are taken at the
    block anchors t = j n3t + 1 and averaged with scale n3t/T; the result is
    the ratio of 18 times the squared average of sigma^2 a/(1-a)^4 to the
    squared average of sigma^2/(1-a)^2, summed over weighted components.
    Returns the raw ratio (zero is possible); callers floor it before use.
    A nonpositive denominator returns the floor directly.
    """
    X = np.asarray(V, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    T, p = X.shape
    if n3t is None:
        n3t = max(int(T**0.66), 2)
    if T < 2 * n3t:
        raise ValueError(f"need T >= 2 n3t (T = {T}, n3t = {n3t})")
    if W is None:
        W = np.ones(p)
    W = np.asarray(W, dtype=np.float64).ravel()
    if W.shape != (p,) or not np.all((W == 0.0) | (W == 1.0)):
        raise ValueError("W must be a 0/1 vector with one entry per column")
    if not np.any(W == 1.0):
        raise ValueError("at least one component must carry weight 1")
    n_blocks = T // n3t
    anchors = np.arange(n_blocks, dtype=np.int64) * n3t  # 0-based: t = j n3t + 1
    scale = n3t / T
    num = 0.0
    den = 0.0
    for i in range(p):
        if W[i] == 0.0:
            continue
        a_terms, d_terms = _clamped_ratios(X[:, i], anchors, n3t)
        num += 18.0 * (scale * float(np.sum(a_terms))) ** 2
        den += (scale * float(np.sum(d_terms))) ** 2
    if den <= 0.0:
        return PHI2_FLOOR
    return num / den


def _reference_a1(u: float) -> float:
    return 0.8 * (math.cos(1.5) + math.cos(4.0 * math.pi * u))


def d1_hat(u: float, s_omega=None) -> float:
    """Squared second-derivative proxy of the reference local spectrum at u.

    Data-free by construction: the reference coefficient path
    a(u) = 0.8(cos 1.5 + cos 4 pi u) stands in for the unknown process. The
    value is the squared modulus of the average over the frequency grid of

        (3/pi) (1 + a e^{-iw})^{-4} a'(u) e^{-iw}
        - (1/pi) |1 + a e^{-iw}|^{-3} a''(u) e^{-iw},

    floored away from zero so downstream powers stay finite.
    """
    if s_omega is None:
        s_omega = D1_GRID
    omegas = np.asarray(s_omega, dtype=np.float64)
    a = _reference_a1(u)
    da = 0.8 * (-4.0 * math.pi * math.sin(4.0 * math.pi * u))
    d2a = 0.8 * (-16.0 * math.pi**2 * math.cos(4.0 * math.pi * u))
    z = np.exp(-1j * omegas)
    base = 1.0 + a * z
    term = (3.0 / math.pi) * base**-4 * da * z - (1.0 / math.pi) * np.abs(base) ** -3 * d2a * z
    val = float(abs(np.mean(term)) ** 2)
    return max(val, D_FLOOR)


def d2_hat(V, r: int, k2: TimeKernel, b2_pilot: float, n_T: int) -> float:
    """Squared-autocovariance summary at block r from tapered local estimates.

    Averages 2 c_hat^2 over lags l = -L..L with L = floor(T^{4/25}) and over
    components (diagonal entries only), using the supplied pilot b2 for the
    inner local autocovariances. Floored away from zero.
    """
    X = np.asarray(V, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    T, p = X.shape
    L = int(T ** (4.0 / 25.0))
    total = 0.0
    for lag in range(-L, L + 1):
        c = local_autocov_hat(X, r, lag, b2_pilot, k2, n_T)
        d = np.diagonal(c)
        total += float(np.sum(2.0 * d**2))
    return max(total / p, D_FLOOR)


def b2_hat(d1: float, d2: float, T: int) -> float:
    """Block time-smoothing bandwidth 1.6786 d1^{-1/5} d2^{1/5} T^{-1/5}, clipped."""
    val = 1.6786 * d1 ** (-0.2) * d2**0.2 * T ** (-0.2)
    return min(max(val, 8.0 / T), 1.0)


def b2_bar(schedule, n_T: int, T: int) -> float:
    """Scalar summary (n_T/T) sum of the per-block b2 values.

    With a full set of blocks this is close to the plain mean; when T/n_T is
    not an integer it differs by the missing tail fraction, which is kept as
    displayed rather than renormalized.
    """
    return n_T / T * float(np.sum(np.asarray(list(schedule), dtype=np.float64)))


def b1_hat(phi2: float, b2bar: float, T: int, k1: LagKernel, k2: TimeKernel) -> float:
    """Lag-smoothing bandwidth from the general MSE-optimal formula, clipped.

    (2 q K1q^2 phi2 T b2bar / (intK1sq intK2sq))^{-1/(2q+1)}; for the QS lag
    kernel with the quadratic time kernel this reduces to
    0.6828 (phi2 T b2bar)^{-1/5}.
    """
    if phi2 <= 0.0:
        raise ValueError("phi2 must be positive (apply the floor first)")
    c = kernel_constants(k1, k2)
    q = c["q"]
    val = (2.0 * q * c["K1q"] ** 2 * phi2 * T * b2bar / (c["intK1sq"] * c["F"])) ** (
        -1.0 / (2.0 * q + 1.0)
    )
    return min(max(val, 1.0 / T), 1.0)


def auto_plan(
    V,
    k1: LagKernel,
    k2: TimeKernel,
    intercept_col: int | None = None,
    n_T: int | None = None,
) -> tuple[BandwidthPlan, PlugInDiagnostics]:
    """Full plug-in pass: returns the estimation plan plus diagnostics.

    Block length defaults to floor(T^0.66) and doubles as both local-fit
    window lengths. Per block: d1 from the reference path, a pilot b2 using
    the white-noise value d2 = 2, then d2 from the data and one fixed-point
    refinement of (d2, b2). The averaged b2 and the floored phi2 give b1.
    The plan carries the scalar b2 average; the per-block schedule is
    reported in the diagnostics.
    """
    if not k2.conforming:
        raise ValueError(
            f"time kernel {k2.name!r} is outside the smoothness class the "
            "plug-in theory needs; pass bandwidths explicitly instead"
        )
    X = np.asarray(V, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    T, p = X.shape
    if n_T is None:
        n_T = int(T**0.66)
    if not 2 <= n_T < T:
        raise ValueError(f"block length {n_T} not in [2, {T})")
    flags = []

    n_sched = T // n_T - 1
    if n_sched < 1:
        raise ValueError(f"T = {T} leaves no interior blocks for n_T = {n_T}")
    d1_vals = []
    d2_vals = []
    schedule = []
    for r in range(1, n_sched + 1):
        u_r = r * n_T / T
        d1 = d1_hat(u_r)
        pilot = 1.6786 * d1 ** (-0.2) * 2.0**0.2 * T ** (-0.2)
        pilot = min(max(pilot, 8.0 / T), 1.0)
        d2 = d2_hat(X, r, k2, pilot, n_T)
        b2_r = b2_hat(d1, d2, T)
        # One fixed-point refinement: recompute d2 under the new b2.
        d2 = d2_hat(X, r, k2, b2_r, n_T)
        b2_r = b2_hat(d1, d2, T)
        if d2 <= D_FLOOR:
            flags.append(f"d2_floor@r={r}")
        if b2_r <= 8.0 / T or b2_r >= 1.0:
            flags.append(f"b2_clip@r={r}")
        d1_vals.append(d1)
        d2_vals.append(d2)
        schedule.append((u_r, b2_r))

    bbar = b2_bar([b for _, b in schedule], n_T, T)

    W = np.ones(p)
    if intercept_col is not None:
        if p == 1:
            raise ValueError("cannot zero the only component's weight")
        W[intercept_col] = 0.0
    phi2_raw = phi2_hat(X, W, n_T)
    phi2 = max(phi2_raw, PHI2_FLOOR)
    if phi2_raw < PHI2_FLOOR:
        flags.append("phi2_floor")

    b1 = b1_hat(phi2, bbar, T, k1, k2)
    if b1 >= 1.0 or b1 <= 1.0 / T:
        flags.append("b1_clip")

    plan = BandwidthPlan(b1=b1, b2=bbar, n_T=n_T, source="PlugIn", b2_bar=bbar)
    diag = PlugInDiagnostics(
        phi2=phi2,
        d1=tuple(d1_vals),
        d2=tuple(d2_vals),
        b2_schedule=tuple(schedule),
        b2_bar=bbar,
        b1=b1,
        n_T=n_T,
        flags=tuple(flags),
    )
    return plan, diag
