"""Time-varying AR(1) simulation with regime breaks.

The process family is

    V_t = mu(t/T) + a1(t/T) * (V_{t-1} - mu((t-1)/T)) + sigma(t/T) * u_t,

with coefficient paths given in rescaled time u = t/T and an ordered set of
break fractions splitting [0, 1] into regimes. Within a regime the paths are
smooth; across a break they may jump. At a break fraction the left regime's
functions apply. The module also exposes the frozen-coefficient local
autocovariance and local spectrum, which serve as population oracles for the
estimators.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _backend

__all__ = [
    "SlsSpec",
    "LocalSpectrum",
    "simulate",
    "local_autocov",
    "local_spectrum",
]

BURN_IN = 200


def _as_func(x) -> Callable[[float], float]:
    if callable(x):
        return x
    val = float(x)
    return lambda u: val


def _per_regime(x, n_regimes: int) -> tuple:
    """Normalize a scalar, callable, or per-regime sequence to a tuple of callables."""
    if isinstance(x, (list, tuple)):
        if len(x) != n_regimes:
            raise ValueError(f"expected {n_regimes} per-regime entries, got {len(x)}")
        return tuple(_as_func(f) for f in x)
    f = _as_func(x)
    return (f,) * n_regimes


@dataclass(frozen=True)
class SlsSpec:
    """Coefficient paths and break points of a time-varying AR(1).

    a1, sigma, and mu may each be a constant, a single function of rescaled
    time (applied in every regime), or a sequence with one function per
    regime. innovations, when given, is called as innovations(rng, n) and
    must return n i.i.d. mean-zero unit-variance draws; the default is
    standard normal.
    """

    a1: object = 0.0
    sigma: object = 1.0
    mu: object = 0.0
    break_fractions: tuple = ()
    innovations: Callable | None = None
    _a1_funcs: tuple = field(init=False, repr=False, compare=False)
    _sigma_funcs: tuple = field(init=False, repr=False, compare=False)
    _mu_funcs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        breaks = tuple(float(b) for b in self.break_fractions)
        if any(not (0.0 < b < 1.0) for b in breaks):
            raise ValueError("break fractions must lie strictly inside (0, 1)")
        if any(b2 <= b1 for b1, b2 in zip(breaks, breaks[1:])):
            raise ValueError("break fractions must be strictly increasing")
        object.__setattr__(self, "break_fractions", breaks)
        n = len(breaks) + 1
        object.__setattr__(self, "_a1_funcs", _per_regime(self.a1, n))
        object.__setattr__(self, "_sigma_funcs", _per_regime(self.sigma, n))
        object.__setattr__(self, "_mu_funcs", _per_regime(self.mu, n))

    def regime(self, u: float) -> int:
        """Regime index at rescaled time u; a break fraction belongs to its left regime."""
        r = 0
        for b in self.break_fractions:
            if b < u:
                r += 1
        return r

    def a1_at(self, u: float) -> float:
        return float(self._a1_funcs[self.regime(u)](u))

    def sigma_at(self, u: float) -> float:
        return float(self._sigma_funcs[self.regime(u)](u))

    def mu_at(self, u: float) -> float:
        return float(self._mu_funcs[self.regime(u)](u))


@dataclass(frozen=True)
class LocalSpectrum:
    """Spectral density of the process frozen at rescaled time u."""

    u: float
    a1: float
    sigma: float

    def __call__(self, omega: float) -> float:
        z = abs(1.0 - self.a1 * complex(math.cos(omega), -math.sin(omega)))
        return (self.sigma**2 / (2.0 * math.pi)) / z**2


def simulate(spec: SlsSpec, T: int, seed: int) -> np.ndarray:
    """Draw one path of length T; returns a (T, 1) matrix.

    The recursion is warmed up with 200 pre-sample steps holding the
    coefficients at their u = 0 values, started from the local mean mu(0);
    the warm-up is discarded. Output is a deterministic function of
    (spec, T, seed); the coefficient paths are checked for |a1| < 1 on the
    evaluation grid because the estimation theory excludes unit roots.
    """
    if T < 2:
        raise ValueError("T must be at least 2")
    rng = np.random.default_rng(seed)
    n = T + BURN_IN
    if spec.innovations is None:
        u = rng.standard_normal(n)
    else:
        u = np.asarray(spec.innovations(rng, n), dtype=np.float64)
        if u.shape != (n,):
            raise ValueError("innovation sampler returned wrong shape")

    grid = np.arange(1, T + 1, dtype=np.float64) / T
    a = np.array([spec.a1_at(g) for g in grid])
    if np.any(np.abs(a) >= 1.0) or abs(spec.a1_at(0.0)) >= 1.0:
        raise ValueError("|a1(u)| >= 1 on the evaluation grid; unit roots are excluded")
    sig = np.array([spec.sigma_at(g) for g in grid])
    mu = np.array([spec.mu_at(g) for g in grid])
    mu_lag = np.array([spec.mu_at((t - 1) / T) for t in range(1, T + 1)])

    a0 = spec.a1_at(0.0)
    s0 = spec.sigma_at(0.0)
    m0 = spec.mu_at(0.0)
    a_full = np.concatenate((np.full(BURN_IN, a0), a))
    s_full = np.concatenate((np.full(BURN_IN, s0), sig))
    mu_full = np.concatenate((np.full(BURN_IN, m0), mu))
    mul_full = np.concatenate((np.full(BURN_IN, m0), mu_lag))
    v = _backend.tvar_recursion(a_full, s_full, mu_full, mul_full, u, m0)
    return v[BURN_IN:].reshape(-1, 1)


def local_autocov(spec: SlsSpec, u: float, k: int) -> float:
    """Autocovariance at lag k of the process frozen at rescaled time u.

    Uses the stationary AR(1) identity sigma^2 a^|k| / (1 - a^2) with the
    coefficients evaluated at u (left regime at a break).
    """
    a = spec.a1_at(u)
    s = spec.sigma_at(u)
    return s**2 * a ** abs(int(k)) / (1.0 - a**2)


def local_spectrum(spec: SlsSpec, u: float, omega: float) -> float:
    """Spectral density f(u, omega) of the process frozen at rescaled time u."""
    return LocalSpectrum(u, spec.a1_at(u), spec.sigma_at(u))(omega)
