"""Long-run variance estimation by double kernel smoothing.

The estimator averages tapered local autocovariances over blocks of the
sample and then weights them across lags:

    J_hat = sum_k K1(b1 k) Gamma_hat(k),
    Gamma_hat(k) = (n_T / (T - n_T)) sum_r c_hat(u_r, k),

where c_hat(u_r, k) is a kernel-tapered lag-k product centered on the block
anchored at (r+1) n_T. The per-observation square-root taper makes J_hat
positive semi-definite whenever the lag kernel is itself PSD-generating.
Smoothing over time is what lets the estimator track nonstationarity that a
classical HAC matrix averages away.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .kernels import LagKernel, TimeKernel, taper_weights

__all__ = [
    "BandwidthPlan",
    "LrvEstimate",
    "DegenerateWindowError",
    "NonPsdWarning",
    "local_autocov_hat",
    "gamma_hat",
    "dk_hac",
    "dk_hac_auto",
]


class DegenerateWindowError(ValueError):
    """Every taper weight in a block vanished (b2 too small relative to 1/T)."""


class NonPsdWarning(UserWarning):
    """Estimate came out materially non-PSD under a non-PSD-generating lag kernel."""


@dataclass(frozen=True)
class BandwidthPlan:
    """Bandwidths and block geometry used by the estimator.

    b2 is either a single value applied to every block or a per-block
    schedule (one entry per block, in block order). b2_bar is the scalar
    summary used in the lag-bandwidth formula; for a scalar b2 it defaults
    to that value, for a schedule to its mean.
    """

    b1: float
    b2: object
    n_T: int
    source: str = "Predetermined"
    b2_bar: float = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        if not 0.0 < self.b1 <= 1.0:
            raise ValueError(f"b1 = {self.b1} outside (0, 1]")
        if self.n_T < 1:
            raise ValueError("n_T must be a positive integer")
        if self.source not in ("Predetermined", "PlugIn"):
            raise ValueError(f"unknown plan source {self.source!r}")
        sched = self.b2_schedule()
        if any(not 0.0 < b <= 1.0 for b in sched):
            raise ValueError("every b2 value must lie in (0, 1]")
        if self.b2_bar is None:
            object.__setattr__(self, "b2_bar", float(np.mean(sched)))

    def b2_schedule(self) -> tuple:
        if np.ndim(self.b2) == 0:
            return (float(self.b2),)
        return tuple(float(b) for b in self.b2)

    def block_b2(self, r: int, n_blocks: int) -> float:
        sched = self.b2_schedule()
        if len(sched) == 1:
            return sched[0]
        if len(sched) != n_blocks:
            raise ValueError(
                f"b2 schedule has {len(sched)} entries for {n_blocks} blocks"
            )
        return sched[r]


@dataclass(frozen=True)
class LrvEstimate:
    """A long-run variance estimate and how it was produced."""

    J: np.ndarray
    plan: BandwidthPlan
    k1: LagKernel
    k2: TimeKernel
    dof_adjusted: bool
    min_eigenvalue: float
    diagnostics: object = None

    @property
    def value(self) -> float:
        """The scalar estimate; only defined for univariate input."""
        if self.J.shape != (1, 1):
            raise ValueError("value is only defined for 1x1 estimates")
        return float(self.J[0, 0])


def _as_matrix(V) -> np.ndarray:
    V = np.asarray(V, dtype=np.float64)
    if V.ndim == 1:
        V = V[:, None]
    if V.ndim != 2:
        raise ValueError("series must be one- or two-dimensional")
    return np.ascontiguousarray(V)


def _n_blocks(T: int, n_T: int) -> int:
    # Anchors sit at (r+1) n_T; the trailing partial block is dropped. The
    # single-block case n_T = T is admitted as the degenerate geometry that
    # collapses the estimator onto the classical HAC form.
    if n_T > T:
        raise ValueError(f"block length {n_T} exceeds sample size {T}")
    if n_T == T:
        return 1
    return (T - n_T) // n_T + 1


def _block_normalizer(T: int, n_T: int) -> float:
    return 1.0 if n_T == T else n_T / (T - n_T)


def _lag_weights(k1: LagKernel, b1: float, T: int) -> np.ndarray:
    """Lag weights K1(b1 k), k = 0..L-1, trailing negligible lags trimmed.

    Lag 0 always survives. The trim threshold 1e-8 never binds for QS at
    practical sizes; for bounded-support kernels the cutoff is exact.
    """
    w = np.asarray(k1(b1 * np.arange(T, dtype=np.float64)))
    keep = np.nonzero(np.abs(w) >= 1e-8)[0]
    last = int(keep[-1]) if keep.size else 0
    return w[: last + 1]


def local_autocov_hat(
    V, r: int, k: int, b2: float, k2: TimeKernel, n_T: int
) -> np.ndarray:
    """Tapered estimate of the local autocovariance at lag k for block r.

    The block anchor is (r+1) n_T; each observation s enters with weight
    sqrt(K2((anchor - s)/(T b2))), so the lag-k product carries the
    geometric-mean weight of its two observations. Negative lags return the
    transpose of the corresponding positive lag, which is an exact identity
    of the weighting scheme.
    """
    X = _as_matrix(V)
    T = X.shape[0]
    anchor = (r + 1) * n_T
    if anchor > T:
        raise ValueError(f"block {r} anchor {anchor} exceeds sample size {T}")
    if abs(k) > T - 1:
        raise ValueError(f"lag {k} out of range for T = {T}")
    if not 0.0 < b2 <= 1.0:
        raise ValueError(f"b2 = {b2} outside (0, 1]")
    g = taper_weights(k2, anchor, T, b2)
    if not np.any(g > 0.0):
        raise DegenerateWindowError(
            f"all taper weights vanish for block {r} (b2 = {b2}, T = {T})"
        )
    Xg = X * g[:, None]
    kk = abs(int(k))
    if kk == 0:
        M = Xg.T @ Xg
    else:
        M = Xg[kk:].T @ Xg[:-kk]
    M = M / (T * b2)
    return M.T if k < 0 else M


def gamma_hat(V, k: int, plan: BandwidthPlan, k2: TimeKernel) -> np.ndarray:
    """Average of the blockwise local autocovariances at lag k."""
    X = _as_matrix(V)
    T = X.shape[0]
    R = _n_blocks(T, plan.n_T)
    out = None
    for r in range(R):
        b2r = plan.block_b2(r, R)
        c = local_autocov_hat(X, r, k, b2r, k2, plan.n_T)
        out = c if out is None else out + c
    return _block_normalizer(T, plan.n_T) * out


def dk_hac(
    V,
    k1: LagKernel,
    k2: TimeKernel,
    plan: BandwidthPlan,
    dof_adjust: bool = False,
    p_model: int = 0,
) -> LrvEstimate:
    """Double-kernel long-run variance estimate under a given plan.

    Equals sum_k K1(b1 k) Gamma_hat(k) over all lags, computed blockwise:
    each block contributes a lag-weighted quadratic form in its tapered
    observations, which keeps the whole sum PSD for PSD-generating K1. The
    optional small-sample factor T/(T - p_model) compensates estimated
    regression coefficients when V holds fitted scores.
    """
    X = _as_matrix(V)
    T, p = X.shape
    if not 0 <= p_model < T:
        raise ValueError(f"p_model = {p_model} outside [0, {T})")
    R = _n_blocks(T, plan.n_T)
    w = _lag_weights(k1, plan.b1, T)
    J = np.zeros((p, p))
    for r in range(R):
        b2r = plan.block_b2(r, R)
        anchor = (r + 1) * plan.n_T
        g = taper_weights(k2, anchor, T, b2r)
        if not np.any(g > 0.0):
            raise DegenerateWindowError(
                f"all taper weights vanish for block {r} (b2 = {b2r}, T = {T})"
            )
        Xg = X * g[:, None]
        J += _backend.kernel_weighted_quadratic(Xg, w) / (T * b2r)
    J *= _block_normalizer(T, plan.n_T)
    if dof_adjust:
        J *= T / (T - p_model)
    J = 0.5 * (J + J.T)
    min_eig = float(np.linalg.eigvalsh(J)[0])
    if not k1.psd_generating and min_eig < -1e-10 * abs(np.trace(J)):
        warnings.warn(
            f"estimate is not PSD (min eigenvalue {min_eig:.3e}) under the "
            f"{k1.name} kernel",
            NonPsdWarning,
            stacklevel=2,
        )
    return LrvEstimate(J, plan, k1, k2, dof_adjust, min_eig)


def dk_hac_auto(
    V,
    k1: LagKernel,
    k2: TimeKernel,
    p_model: int = 0,
    dof_adjust: bool | None = None,
    intercept_col: int | None = None,
) -> LrvEstimate:
    """Double-kernel estimate with data-dependent bandwidths.

    Builds the plug-in plan (block length floor(T^0.66), then b2 from the
    local-spectrum derivative proxies and b1 from phi_hat) and runs dk_hac
    with it. dof adjustment defaults on when p_model > 0 (scores from a
    fitted model) and off for raw series. intercept_col marks a column to
    exclude from the phi_hat weighting, the usual treatment of a constant
    regressor.
    """
    from . import bandwidths

    X = _as_matrix(V)
    T = X.shape[0]
    if T < 32:
        raise ValueError("automatic bandwidths need T >= 32")
    if dof_adjust is None:
        dof_adjust = p_model > 0
    plan, diag = bandwidths.auto_plan(X, k1, k2, intercept_col=intercept_col)
    est = dk_hac(X, k1, k2, plan, dof_adjust=dof_adjust, p_model=p_model)
    return LrvEstimate(
        est.J, est.plan, est.k1, est.k2, est.dof_adjusted, est.min_eigenvalue, diag
    )
