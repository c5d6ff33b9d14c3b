"""NumPy implementations of the sequential inner loops.

Drop-in twin of the compiled module ``_recursions_cy``. Import selection
happens in ``_backend``; both implementations must agree to floating-point
accuracy (they are checked against each other and against slow reference
loops in the test suite). The lag-weighted quadratic here goes through an
FFT Toeplitz multiply, so results match the compiled loops only to rounding,
not bit for bit.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "kernel_weighted_quadratic",
    "window_ar1_stats",
    "tvar_recursion",
]


def kernel_weighted_quadratic(X, w):
    """Symmetric lag-weighted quadratic X' C X with C[s, t] = w[|s - t|].

    X is (T, p), w is a vector of lag weights starting at lag 0; lags at and
    beyond len(w) get weight zero. Returns the (p, p) matrix

        w[0] * L0 + sum_{k>=1} w[k] * (Lk + Lk')   with  Lk = sum_s X_s X_{s-k}'.
    """
    X = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X.ndim == 1:
        X = X[:, None]
    w = np.asarray(w, dtype=np.float64).ravel()
    T = X.shape[0]
    c = np.zeros(T, dtype=np.float64)
    m = min(len(w), T)
    c[:m] = w[:m]
    # Circulant embedding of the symmetric Toeplitz matrix built from c.
    nfft = 2 * T
    col = np.zeros(nfft, dtype=np.float64)
    col[:T] = c
    col[nfft - T + 1 :] = c[1:][::-1]
    fc = np.fft.rfft(col)
    fX = np.fft.rfft(X, n=nfft, axis=0)
    Y = np.fft.irfft(fX * fc[:, None], n=nfft, axis=0)[:T]
    return X.T @ Y


def window_ar1_stats(v, anchors, n2t):
    """First-order autoregression fit on trailing windows of v.

    For each 0-based anchor a the window covers observations
    [a - n2t + 1, a]; anchors with fewer than n2t points behind them fall
    back to the first full window [0, n2t - 1]. Returns (a1, sig) where a1
    is the no-intercept slope of v_j on v_{j-1} over the window and sig the
    square root of the residual sum of squares (not divided by the window
    length). Windows with zero lag variance give (0, 0).
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    anchors = np.asarray(anchors, dtype=np.int64).ravel()
    T = v.shape[0]
    if n2t < 2 or n2t > T:
        raise ValueError(f"window length {n2t} not in [2, {T}]")
    prod = v[1:] * v[:-1]
    lagsq = v[:-1] ** 2
    cursq = v[1:] ** 2
    cp = np.concatenate(([0.0], np.cumsum(prod)))
    cl = np.concatenate(([0.0], np.cumsum(lagsq)))
    cc = np.concatenate(([0.0], np.cumsum(cursq)))
    # prod[i] pairs v[i+1] with v[i]; the window ending at anchor a uses
    # pairs i in [a - n2t, a - 1], and the fallback window [0, n2t - 2]
    # has one pair fewer because v[-1] does not exist.
    hi = np.where(anchors < n2t, n2t - 1, anchors)
    lo = np.where(anchors < n2t, 0, anchors - n2t)
    sxy = cp[hi] - cp[lo]
    sxx = cl[hi] - cl[lo]
    syy = cc[hi] - cc[lo]
    ok = sxx > 0.0
    a1 = np.where(ok, sxy / np.where(ok, sxx, 1.0), 0.0)
    rss = np.where(ok, syy - a1 * sxy, 0.0)
    sig = np.sqrt(np.maximum(rss, 0.0))
    return a1, sig


def tvar_recursion(a, sig, mu, mu_lag, u, v0):
    """Time-varying AR(1) recursion driven by the innovation sequence u.

    v_t = mu[t] + a[t] * (v_{t-1} - mu_lag[t]) + sig[t] * u[t], with
    v_{-1} = v0. All coefficient arrays have the same length as u.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    sig = np.asarray(sig, dtype=np.float64).ravel()
    mu = np.asarray(mu, dtype=np.float64).ravel()
    mu_lag = np.asarray(mu_lag, dtype=np.float64).ravel()
    u = np.asarray(u, dtype=np.float64).ravel()
    T = u.shape[0]
    out = np.empty(T, dtype=np.float64)
    prev = float(v0)
    for t in range(T):
        prev = mu[t] + a[t] * (prev - mu_lag[t]) + sig[t] * u[t]
        out[t] = prev
    return out
