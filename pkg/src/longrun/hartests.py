"""Test statistics normalized by a long-run variance estimate.

Regression t ratios, the Diebold-Mariano (1995) equal-predictive-ability
test, the Giacomini-Rossi (2009) forecast-breakdown test, and sandwich
covariance assembly for GMM and IV estimators. Each consumes an
LrvEstimate produced elsewhere; nothing here chooses bandwidths.

Critical values are standard normal when the normalizer is consistent and
come from FixedBCriticalValues when it is a fixed-b normalizer. A test
never returns NaN: degenerate variances raise instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist

import numpy as np

from .baselines import FixedBCriticalValues
from .dkhac import LrvEstimate

__all__ = [
    "RegressionFit",
    "TestResult",
    "SingularDesignError",
    "NonPositiveVarianceError",
    "SingularBreadError",
    "SingularZXError",
    "ols_fit",
    "t_test",
    "dm_test",
    "gr_test",
    "gmm_sandwich",
    "iv_sandwich",
]

_COND_LIMIT = 1e12


class SingularDesignError(ValueError):
    """X'X is numerically singular."""


class NonPositiveVarianceError(ValueError):
    """The estimated variance of the statistic is not positive."""


class SingularBreadError(ValueError):
    """L'WL in the GMM sandwich is numerically singular."""


class SingularZXError(ValueError):
    """Z'X in the IV sandwich is numerically singular."""


@dataclass(frozen=True)
class RegressionFit:
    """Least-squares fit with the per-observation scores x_t e_t.

    Qxx is X'X/T. The scores are what the LRV estimators consume; their
    sample mean is zero by the normal equations.
    """

    X: np.ndarray
    y: np.ndarray
    beta_hat: np.ndarray
    residuals: np.ndarray
    scores: np.ndarray
    qxx: np.ndarray

    @property
    def nobs(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class TestResult:
    statistic: float
    critical_value: float
    nominal_level: float
    reject: bool
    lrv_provenance: str


def _two_sided_cv(cv_source, level: float) -> tuple[float, str]:
    if isinstance(cv_source, FixedBCriticalValues):
        return cv_source.critical_value(level), f"fixed-b[{cv_source.family}]"
    if cv_source == "normal":
        return NormalDist().inv_cdf(1.0 - level / 2.0), "normal"
    raise ValueError(f"unknown critical value source {cv_source!r}")


def _provenance(est: LrvEstimate, cv_label: str) -> str:
    return f"{est.k1.name}/{est.plan.source}/{cv_label}"


def ols_fit(y, X) -> RegressionFit:
    """Least squares by the normal equations, with a conditioning guard."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be T x p with T matching y")
    T = X.shape[0]
    G = X.T @ X
    if not np.all(np.isfinite(G)) or np.linalg.cond(G) >= _COND_LIMIT:
        raise SingularDesignError("X'X is singular or too ill-conditioned")
    beta = np.linalg.solve(G, X.T @ y)
    resid = y - X @ beta
    scores = X * resid[:, None]
    return RegressionFit(X, y, beta, resid, scores, G / T)


def t_test(
    fit: RegressionFit,
    r: int,
    beta0_r: float,
    lrv_of_scores: LrvEstimate,
    cv_source="normal",
    level: float = 0.05,
) -> TestResult:
    """Two-sided t ratio for coefficient r against beta0_r.

    The variance is the sandwich Qxx^{-1} J Qxx^{-1} evaluated at the
    supplied LRV of the scores; the statistic is sqrt(T) (beta_r - beta0_r)
    over the square root of its (r, r) element.
    """
    J = np.atleast_2d(np.asarray(lrv_of_scores.J, dtype=np.float64))
    p = fit.qxx.shape[0]
    if not 0 <= r < p:
        raise ValueError(f"coefficient index {r} out of range")
    if J.shape != (p, p):
        raise ValueError("LRV dimension does not match the design")
    inner = np.linalg.solve(fit.qxx, J)
    sigma = np.linalg.solve(fit.qxx, inner.T)
    var_r = float(sigma[r, r])
    if var_r <= 0.0:
        raise NonPositiveVarianceError(f"sandwich variance {var_r} for coefficient {r}")
    stat = math.sqrt(fit.nobs) * (float(fit.beta_hat[r]) - beta0_r) / math.sqrt(var_r)
    cv, cv_label = _two_sided_cv(cv_source, level)
    return TestResult(stat, cv, level, abs(stat) > cv, _provenance(lrv_of_scores, cv_label))


def _scalar_lrv(series: np.ndarray, lrv_method):
    """Run lrv_method on the demeaned series; unpack an optional cv bundle."""
    centered = series - series.mean()
    out = lrv_method(centered[:, None])
    if isinstance(out, tuple):
        est, cv_source = out
    else:
        est, cv_source = out, "normal"
    return est, cv_source


def _mean_over_lrv(series, lrv_method, level, label) -> TestResult:
    series = np.asarray(series, dtype=np.float64).reshape(-1)
    n = series.shape[0]
    if n < 16:
        raise ValueError(f"{label} needs at least 16 observations")
    if not np.any(series != 0.0):
        # Identically zero input (e.g. identical loss series). The statistic
        # is zero by construction and no normalizer is defined or needed.
        cv, _ = _two_sided_cv("normal", level)
        return TestResult(0.0, cv, level, False, "degenerate zero series")
    est, cv_source = _scalar_lrv(series, lrv_method)
    j = est.value
    if j <= 0.0:
        raise NonPositiveVarianceError(f"long-run variance {j} in {label}")
    stat = math.sqrt(n) * float(series.mean()) / math.sqrt(j)
    cv, cv_label = _two_sided_cv(cv_source, level)
    return TestResult(stat, cv, level, abs(stat) > cv, _provenance(est, cv_label))


def dm_test(loss1, loss2, lrv_method, level: float = 0.05) -> TestResult:
    """Equal-predictive-ability test on the loss differential d_t = L2_t - L1_t.

    lrv_method receives the demeaned differential as a column and returns an
    LrvEstimate, or an (LrvEstimate, FixedBCriticalValues) pair when the
    normalizer calls for nonstandard critical values.
    """
    l1 = np.asarray(loss1, dtype=np.float64).reshape(-1)
    l2 = np.asarray(loss2, dtype=np.float64).reshape(-1)
    if l1.shape != l2.shape:
        raise ValueError("loss series lengths differ")
    return _mean_over_lrv(l2 - l1, lrv_method, level, "dm_test")


def gr_test(in_sample_losses, out_sample_losses, lrv_method, level: float = 0.05) -> TestResult:
    """Forecast-breakdown test on surprise losses under a fixed scheme.

    The surprise loss is the out-of-sample loss minus the mean in-sample
    loss; the statistic is the scaled mean of that series over the square
    root of its long-run variance.
    """
    lin = np.asarray(in_sample_losses, dtype=np.float64).reshape(-1)
    lout = np.asarray(out_sample_losses, dtype=np.float64).reshape(-1)
    if lin.size == 0:
        raise ValueError("in-sample losses are empty")
    return _mean_over_lrv(lout - lin.mean(), lrv_method, level, "gr_test")


def gmm_sandwich(moments, L_hat, W_hat, lrv_method) -> np.ndarray:
    """Asymptotic covariance of a GMM estimator with weighting W_hat.

    moments is the T x k series m_t(beta_hat), L_hat the k x p Jacobian
    average, W_hat the k x k weighting matrix. Returns the p x p matrix
    (L'WL)^{-1} L'W J WL (L'WL)^{-1} with J the chosen LRV of the moments.
    """
    M = np.asarray(moments, dtype=np.float64)
    if M.ndim == 1:
        M = M[:, None]
    L = np.atleast_2d(np.asarray(L_hat, dtype=np.float64))
    W = np.atleast_2d(np.asarray(W_hat, dtype=np.float64))
    k = M.shape[1]
    if L.shape[0] != k or W.shape != (k, k):
        raise ValueError("dimensions of moments, L_hat and W_hat do not conform")
    est = lrv_method(M)
    J = np.atleast_2d(est.J)
    bread = L.T @ W @ L
    if np.linalg.cond(bread) >= _COND_LIMIT:
        raise SingularBreadError("L'WL is singular or too ill-conditioned")
    wing = np.linalg.solve(bread, L.T @ W)
    return wing @ J @ wing.T


def iv_sandwich(y, X, Z, lrv_method) -> np.ndarray:
    """Asymptotic covariance of the just-identified IV estimator.

    beta = (Z'X)^{-1} Z'y; the scores are z_t e_t and the covariance is
    Qzx^{-1} J (Qzx^{-1})' with Qzx = Z'X/T. With Z = X this is the OLS
    sandwich.
    """
    X = np.asarray(X, dtype=np.float64)
    Z = np.asarray(Z, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if X.ndim == 1:
        X = X[:, None]
    if Z.ndim == 1:
        Z = Z[:, None]
    if X.shape != Z.shape or X.shape[0] != y.shape[0]:
        raise ValueError("y, X and Z dimensions do not conform")
    T = X.shape[0]
    qzx = Z.T @ X / T
    if np.linalg.cond(qzx) >= _COND_LIMIT:
        raise SingularZXError("Z'X is singular or too ill-conditioned")
    beta = np.linalg.solve(qzx * T, Z.T @ y)
    resid = y - X @ beta
    est = lrv_method(Z * resid[:, None])
    J = np.atleast_2d(est.J)
    qinv_j = np.linalg.solve(qzx, J)
    return np.linalg.solve(qzx, qinv_j.T).T
