"""Timing comparison: compiled inner loops vs the NumPy fallback.

The three primitives are imported from both backend modules directly, so
one process covers both columns. End-to-end numbers (full estimate, one
small experiment) need the backend chosen at import time, so those run in
subprocesses with LONGRUN_BACKEND set.

Usage: python benchmarks/bench_backends.py [--repeat 5] [--skip-e2e]
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

import longrun._recursions as np_impl

try:
    import longrun._recursions_cy as cy_impl
except ImportError:
    cy_impl = None


def best_of(fn, repeat, min_time=0.05):
    """Best wall time per call, auto-scaling the inner loop."""
    n = 1
    while True:
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        dt = time.perf_counter() - t0
        if dt >= min_time:
            break
        n *= 4
    best = dt / n
    for _ in range(repeat - 1):
        t0 = time.perf_counter()
        for _ in range(n):
            fn()
        best = min(best, (time.perf_counter() - t0) / n)
    return best


def primitive_cases(T):
    rng = np.random.default_rng(T)
    X = rng.standard_normal((T, 2))
    X[1:] += 0.6 * X[:-1]
    n2t = max(2, int(T**0.66))
    # lag weights with a realistic decay profile and support
    w = np.maximum(1.0 - np.arange(T, dtype=np.float64) / (0.1 * T + 2.0), 0.0)
    w = np.ascontiguousarray(w[w > 0.0])
    v = np.ascontiguousarray(X[:, 0])
    anchors = np.arange(n2t, T, n2t, dtype=np.int64)
    a = np.full(T, 0.5)
    sig = np.full(T, 1.0)
    mu = np.zeros(T)
    u = rng.standard_normal(T)
    return {
        "quadratic": lambda impl: impl.kernel_weighted_quadratic(X, w),
        "ar1 windows": lambda impl: impl.window_ar1_stats(v, anchors, n2t),
        "tvar path": lambda impl: impl.tvar_recursion(a, sig, mu, mu, u, 0.0),
    }


def run_primitives(sizes, repeat):
    print(f"{'primitive':<14}{'T':>6}{'numpy':>12}{'compiled':>12}{'speedup':>9}")
    for T in sizes:
        for name, call in primitive_cases(T).items():
            t_np = best_of(lambda: call(np_impl), repeat)
            if cy_impl is None:
                print(f"{name:<14}{T:>6}{t_np * 1e6:>10.1f}us{'-':>12}{'-':>9}")
                continue
            t_cy = best_of(lambda: call(cy_impl), repeat)
            print(
                f"{name:<14}{T:>6}{t_np * 1e6:>10.1f}us{t_cy * 1e6:>10.1f}us"
                f"{t_np / t_cy:>8.1f}x"
            )


_E2E_SNIPPET = """
import time
import numpy as np
from longrun import _backend
from longrun.dkhac import dk_hac_auto
from longrun.kernels import lag_kernel, time_kernel
from longrun.montecarlo import run_experiment

rng = np.random.default_rng(3)
v = rng.standard_normal(2000)
k1, k2 = lag_kernel("qs"), time_kernel("epanechnikov")
dk_hac_auto(v, k1, k2)  # warm up
t0 = time.perf_counter()
for _ in range(20):
    dk_hac_auto(v, k1, k2)
t_est = (time.perf_counter() - t0) / 20
t0 = time.perf_counter()
run_experiment("M1", 200, (0.0,), ("dkhac",), R=200, base_seed=1)
t_exp = time.perf_counter() - t0
print(f"{_backend.BACKEND} {t_est:.6f} {t_exp:.3f}")
"""


def run_e2e():
    print()
    print("end to end (estimate: dk_hac_auto T=2000; experiment: M1 T=200 R=200)")
    backends = ["numpy"] + (["extension"] if cy_impl is not None else [])
    for backend in backends:
        env = dict(os.environ, LONGRUN_BACKEND=backend)
        out = subprocess.run(
            [sys.executable, "-c", _E2E_SNIPPET],
            env=env, capture_output=True, text=True, check=True,
        ).stdout.split()
        print(f"{out[0]:<11} estimate {float(out[1]) * 1e3:7.1f}ms"
              f"   experiment {float(out[2]):6.2f}s")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,1000,4000")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--skip-e2e", action="store_true")
    args = ap.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    if cy_impl is None:
        print("compiled extension not importable; timing the fallback only")
    run_primitives(sizes, args.repeat)
    if not args.skip_e2e:
        run_e2e()


if __name__ == "__main__":
    main()
