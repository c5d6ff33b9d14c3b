"""Kernel functions and their analytic constants.

Two kinds of smoothing weights are used by the estimators in this package:
lag kernels weight sample autocovariances by lag (the classical HAC role),
and time kernels weight observations by their distance from a block anchor
in rescaled time. The taper form built by :func:`k2_star_weight` assigns
each observation the same square-root weight across lags, which is what
makes the resulting long-run variance estimates positive semi-definite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "LagKernel",
    "TimeKernel",
    "lag_kernel",
    "time_kernel",
    "eval_k1",
    "eval_k2",
    "k2_star_weight",
    "taper_weights",
    "kernel_constants",
]

_QS_ARC = 1.2 * math.pi  # frequency scale of the quadratic spectral kernel


def _qs(x):
    # Closed form loses ~8 digits to cancellation near 0; switch to the
    # series 1 - y^2/10 + y^4/280 below |x| = 1e-4 (y = 1.2 pi x).
    x = np.abs(np.asarray(x, dtype=np.float64))
    y = _QS_ARC * x
    small = x < 1e-4
    ys = np.where(small, y, 1.0)
    series = 1.0 - ys**2 / 10.0 + ys**4 / 280.0
    yl = np.where(small, 1.0, y)
    with np.errstate(invalid="ignore", divide="ignore"):
        closed = (25.0 / (12.0 * math.pi**2)) * (np.sin(yl) / yl - np.cos(yl)) / np.where(small, 1.0, x) ** 2
    return np.where(small, series, closed)


def _bartlett(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(x < 1.0, 1.0 - x, 0.0)


def _parzen(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    inner = 1.0 - 6.0 * x**2 + 6.0 * x**3
    outer = 2.0 * (1.0 - np.minimum(x, 1.0)) ** 3
    return np.where(x <= 0.5, inner, np.where(x <= 1.0, outer, 0.0))


def _tukey_hanning(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(x < 1.0, 0.5 * (1.0 + np.cos(math.pi * x)), 0.0)


def _truncated(x):
    x = np.abs(np.asarray(x, dtype=np.float64))
    return np.where(x <= 1.0, 1.0, 0.0)


@dataclass(frozen=True)
class LagKernel:
    """Lag-smoothing kernel: K(0) = 1, even, bounded by 1 in absolute value.

    q is the characteristic exponent governing the bias rate and k1q the
    matching curvature constant lim_{x->0} (1 - K(x)) / |x|^q. Kernels whose
    spectral window is nonnegative (``psd_generating``) yield positive
    semi-definite weighted autocovariance sums.
    """

    name: str
    q: float | None
    k1q: float | None
    int_k1_sq: float
    psd_generating: bool
    _func: Callable = field(repr=False, compare=False)

    def __call__(self, x):
        out = self._func(x)
        return float(out) if np.ndim(x) == 0 else out


@dataclass(frozen=True)
class TimeKernel:
    """Time-smoothing kernel on [0, 1], unit mass, symmetric about 1/2.

    f_const is the integral of K2^2 and h_const the squared second moment
    (int x^2 K2)^2; both feed the bandwidth formulas. The uniform kernel is
    admitted as a testing device only: it is discontinuous at the support
    edges (``conforming`` False) and automatic bandwidth selection rejects
    it, but it collapses the blockwise estimator onto the classical HAC
    form, which gives an exact cross-check.
    """

    name: str
    f_const: float
    h_const: float
    conforming: bool
    _func: Callable = field(repr=False, compare=False)

    def __call__(self, x):
        out = self._func(x)
        return float(out) if np.ndim(x) == 0 else out


def _k2_quadratic(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where((x >= 0.0) & (x <= 1.0), 6.0 * x * (1.0 - x), 0.0)


def _k2_uniform(x):
    x = np.asarray(x, dtype=np.float64)
    return np.where((x >= 0.0) & (x <= 1.0), 1.0, 0.0)


_LAG_KERNELS = {
    # int K^2 values are textbook results for these kernels; q and k1q come
    # from expanding 1 - K(x) at the origin.
    "qs": LagKernel("qs", 2.0, 18.0 * math.pi**2 / 125.0, 1.0, True, _qs),
    "bartlett": LagKernel("bartlett", 1.0, 1.0, 2.0 / 3.0, True, _bartlett),
    "parzen": LagKernel("parzen", 2.0, 6.0, 151.0 / 280.0, True, _parzen),
    "tukey-hanning": LagKernel("tukey-hanning", 2.0, math.pi**2 / 4.0, 0.75, False, _tukey_hanning),
    # Flat weights up to the truncation point: K is identically 1 near 0 so
    # no q with k1q in (0, inf) exists; barred from plug-in bandwidths.
    "truncated": LagKernel("truncated", None, None, 2.0, False, _truncated),
}

_TIME_KERNELS = {
    # 6x(1-x): int K2^2 = 6/5, (int x^2 K2)^2 = (3/10)^2 = 9/100
    "epanechnikov": TimeKernel("epanechnikov", 1.2, 0.09, True, _k2_quadratic),
    "uniform": TimeKernel("uniform", 1.0, 1.0 / 9.0, False, _k2_uniform),
}


def lag_kernel(name: str) -> LagKernel:
    try:
        return _LAG_KERNELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown lag kernel {name!r}; choose from {sorted(_LAG_KERNELS)}") from None


def time_kernel(name: str) -> TimeKernel:
    try:
        return _TIME_KERNELS[name.lower()]
    except KeyError:
        raise ValueError(f"unknown time kernel {name!r}; choose from {sorted(_TIME_KERNELS)}") from None


def eval_k1(kernel: LagKernel, x):
    """Evaluate a lag kernel at x (scalar or array)."""
    return kernel(x)


def eval_k2(kernel: TimeKernel, x):
    """Evaluate a time kernel at x (scalar or array)."""
    return kernel(x)


def k2_star_weight(kernel: TimeKernel, anchor: int, s: int, k: int, T: int, b2: float) -> float:
    """Taper weight pairing observation s with its lag partner.

    Geometric mean of the kernel at (anchor - s)/(T b2) and at the same
    expression for s -+ k (minus for k >= 0, plus for k < 0). Zero whenever
    either argument leaves [0, 1].
    """
    other = s - k if k >= 0 else s + k
    w1 = float(kernel((anchor - s) / (T * b2)))
    w2 = float(kernel((anchor - other) / (T * b2)))
    return math.sqrt(w1 * w2)


def taper_weights(kernel: TimeKernel, anchor: int, T: int, b2: float) -> np.ndarray:
    """Per-observation square-root weights sqrt(K2((anchor - s)/(T b2))), s = 1..T."""
    s = np.arange(1, T + 1, dtype=np.float64)
    return np.sqrt(kernel((anchor - s) / (T * b2)))


def kernel_constants(kernel: LagKernel, time_kernel: TimeKernel) -> dict:
    """Analytic constants consumed by the bandwidth formulas.

    Raises for kernels without a finite positive curvature constant, which
    the automatic-bandwidth theory requires.
    """
    if kernel.q is None or kernel.k1q is None:
        raise ValueError(
            f"lag kernel {kernel.name!r} has no valid characteristic exponent; "
            "automatic bandwidth selection is not defined for it"
        )
    return {
        "q": kernel.q,
        "K1q": kernel.k1q,
        "intK1sq": kernel.int_k1_sq,
        "F": time_kernel.f_const,
        "H": time_kernel.h_const,
    }
