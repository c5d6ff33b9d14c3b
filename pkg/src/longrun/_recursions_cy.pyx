# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled implementations of the sequential inner loops.

Same contract as the pure NumPy module ``_recursions``; see the docstrings
there. The lag-weighted quadratic is computed by direct loops with an early
skip of zero-weight lags, so kernels with bounded support only pay for the
lags they use.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

__all__ = [
    "kernel_weighted_quadratic",
    "window_ar1_stats",
    "tvar_recursion",
]


def kernel_weighted_quadratic(X, w):
    """Symmetric lag-weighted quadratic X' C X with C[s, t] = w[|s - t|]."""
    X_arr = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    if X_arr.ndim == 1:
        X_arr = X_arr[:, None]
    w_arr = np.ascontiguousarray(np.asarray(w, dtype=np.float64).ravel())
    cdef double[:, ::1] x = X_arr
    cdef double[::1] wv = w_arr
    cdef Py_ssize_t T = x.shape[0]
    cdef Py_ssize_t p = x.shape[1]
    cdef Py_ssize_t L = wv.shape[0]
    if L > T:
        L = T
    out_arr = np.zeros((p, p), dtype=np.float64)
    off_arr = np.zeros((p, p), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, ::1] off = off_arr
    cdef Py_ssize_t k, s, i, j
    cdef double wk, acc
    if L > 0 and wv[0] != 0.0:
        wk = wv[0]
        for i in range(p):
            for j in range(i, p):
                acc = 0.0
                for s in range(T):
                    acc += x[s, i] * x[s, j]
                out[i, j] += wk * acc
                if j > i:
                    out[j, i] += wk * acc
    for k in range(1, L):
        wk = wv[k]
        if wk == 0.0:
            continue
        for i in range(p):
            for j in range(p):
                acc = 0.0
                for s in range(k, T):
                    acc += x[s, i] * x[s - k, j]
                off[i, j] += wk * acc
    for i in range(p):
        for j in range(p):
            out[i, j] += off[i, j] + off[j, i]
    return out_arr


def window_ar1_stats(v, anchors, n2t):
    """First-order autoregression fit on trailing windows of v."""
    v_arr = np.ascontiguousarray(np.asarray(v, dtype=np.float64).ravel())
    a_arr = np.ascontiguousarray(np.asarray(anchors, dtype=np.int64).ravel())
    cdef double[::1] vv = v_arr
    cdef cnp.int64_t[::1] anc = a_arr
    cdef Py_ssize_t T = vv.shape[0]
    cdef Py_ssize_t n = n2t
    if n < 2 or n > T:
        raise ValueError(f"window length {n2t} not in [2, {T}]")
    cdef Py_ssize_t m = anc.shape[0]
    a1_arr = np.zeros(m, dtype=np.float64)
    sig_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] a1 = a1_arr
    cdef double[::1] sig = sig_arr
    cdef Py_ssize_t idx, a, lo, hi, j
    cdef double sxy, sxx, syy, slope, rss
    for idx in range(m):
        a = anc[idx]
        if a < n:
            lo = 1
            hi = n - 1
        else:
            lo = a - n + 1
            hi = a
        sxy = 0.0
        sxx = 0.0
        syy = 0.0
        for j in range(lo, hi + 1):
            sxy += vv[j] * vv[j - 1]
            sxx += vv[j - 1] * vv[j - 1]
            syy += vv[j] * vv[j]
        if sxx > 0.0:
            slope = sxy / sxx
            rss = syy - slope * sxy
            if rss < 0.0:
                rss = 0.0
            a1[idx] = slope
            sig[idx] = sqrt(rss)
    return a1_arr, sig_arr


def tvar_recursion(a, sig, mu, mu_lag, u, v0):
    """Time-varying AR(1) recursion driven by the innovation sequence u."""
    a_arr = np.ascontiguousarray(np.asarray(a, dtype=np.float64).ravel())
    s_arr = np.ascontiguousarray(np.asarray(sig, dtype=np.float64).ravel())
    m_arr = np.ascontiguousarray(np.asarray(mu, dtype=np.float64).ravel())
    ml_arr = np.ascontiguousarray(np.asarray(mu_lag, dtype=np.float64).ravel())
    u_arr = np.ascontiguousarray(np.asarray(u, dtype=np.float64).ravel())
    cdef double[::1] av = a_arr
    cdef double[::1] sv = s_arr
    cdef double[::1] mv = m_arr
    cdef double[::1] mlv = ml_arr
    cdef double[::1] uv = u_arr
    cdef Py_ssize_t T = uv.shape[0]
    out_arr = np.empty(T, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double prev = v0
    cdef Py_ssize_t t
    for t in range(T):
        prev = mv[t] + av[t] * (prev - mlv[t]) + sv[t] * uv[t]
        out[t] = prev
    return out_arr
