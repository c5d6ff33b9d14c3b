"""Lag-kernel and time-kernel unit tests.

Closed forms are checked against hand values and against the slow
reference implementations in oracles.py; the QS kernel additionally
against direct numerical integration of its spectral window, which is
how Andrews (1991) defines it.
"""
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import oracles
from longrun.kernels import (
    LagKernel,
    k2_star_weight,
    kernel_constants,
    lag_kernel,
    taper_weights,
    time_kernel,
)


# ---------------------------------------------------------------------------
# lag kernels


def test_qs_frozen_points():
    qs = lag_kernel("qs")
    # Values frozen from the closed form 25/(12 pi^2 x^2) [sin(y)/y - cos(y)],
    # y = 6 pi x / 5, evaluated by hand with mpmath at 50 digits.
    assert_allclose(qs(0.5), 0.6869307300640595, rtol=0, atol=1e-15)
    assert_allclose(qs(1.0), 0.13786058167459359, rtol=0, atol=1e-15)
    assert_allclose(qs(0.001), 0.9999985787722956, rtol=0, atol=1e-15)
    assert qs(0.0) == 1.0


def test_qs_matches_spectral_window_integral():
    qs = lag_kernel("qs")
    for x in (0.05, 0.3, 0.7, 1.2, 2.5):
        want = oracles.qs_from_spectral_window(x)
        assert_allclose(qs(x), want, rtol=0, atol=5e-10)


def test_qs_small_argument_branch_is_series_not_closed_form():
    # The closed form overshoots 1 just below the switch point (catastrophic
    # cancellation: it gives 1.0000000741744144 at x = 1e-5), so a value <= 1
    # there proves the series branch is in use.
    qs = lag_kernel("qs")
    assert oracles.qs_closed_form(1e-5) > 1.0
    x = 1e-5
    y = 1.2 * math.pi * x
    series = 1.0 - y**2 / 10.0 + y**4 / 280.0
    assert qs(x) == pytest.approx(series, abs=1e-18)
    assert qs(x) <= 1.0
    assert qs(-x) == qs(x)


def test_bartlett_and_parzen_hand_values():
    bart = lag_kernel("bartlett")
    parzen = lag_kernel("parzen")
    assert bart(0.3) == pytest.approx(0.7)
    assert bart(-0.3) == pytest.approx(0.7)
    assert bart(1.0) == 0.0
    assert bart(1.5) == 0.0
    # Parzen: 1 - 6x^2 + 6|x|^3 on [0, 1/2], 2(1-|x|)^3 on (1/2, 1].
    assert parzen(0.25) == pytest.approx(0.71875)
    assert parzen(0.75) == pytest.approx(0.03125)
    assert parzen(0.5) == pytest.approx(0.25)
    assert parzen(1.0) == 0.0
    for x in (0.1, 0.4, 0.9):
        assert parzen(x) == pytest.approx(oracles.parzen(x), abs=1e-15)
        assert bart(x) == pytest.approx(oracles.bartlett(x), abs=1e-15)


def test_tukey_hanning_values():
    th = lag_kernel("tukey-hanning")
    assert th(0.5) == pytest.approx(0.5)
    assert th(0.0) == 1.0
    assert th(1.0) == pytest.approx(0.0, abs=1e-15)
    assert th(1.2) == 0.0
    assert not th.psd_generating


def test_truncated_kernel():
    tr = lag_kernel("truncated")
    assert tr(0.999) == 1.0
    assert tr(1.0) == 1.0
    assert tr(1.001) == 0.0
    assert tr.q is None


def test_lag_kernel_lookup():
    assert lag_kernel("QS") is lag_kernel("qs")
    assert lag_kernel("Bartlett").name == "bartlett"
    with pytest.raises(ValueError):
        lag_kernel("epanechnikov")


def test_kernel_constants_table():
    # q, K1,q, and the squared-kernel integral for each admissible kernel.
    c = kernel_constants(lag_kernel("qs"), time_kernel("epanechnikov"))
    assert c["q"] == 2
    assert_allclose(c["K1q"], 18.0 * math.pi**2 / 125.0, rtol=1e-15)
    assert c["intK1sq"] == pytest.approx(1.0)
    assert c["F"] == pytest.approx(1.2)
    assert c["H"] == pytest.approx(0.09)

    c = kernel_constants(lag_kernel("bartlett"), time_kernel("epanechnikov"))
    assert c["q"] == 1
    assert c["K1q"] == pytest.approx(1.0)
    assert c["intK1sq"] == pytest.approx(2.0 / 3.0)

    c = kernel_constants(lag_kernel("parzen"), time_kernel("uniform"))
    assert c["q"] == 2
    assert c["K1q"] == pytest.approx(6.0)
    assert c["intK1sq"] == pytest.approx(151.0 / 280.0)
    assert c["F"] == pytest.approx(1.0)
    assert c["H"] == pytest.approx(1.0 / 9.0)

    c = kernel_constants(lag_kernel("tukey-hanning"), time_kernel("epanechnikov"))
    assert c["q"] == 2
    assert c["K1q"] == pytest.approx(math.pi**2 / 4.0)
    assert c["intK1sq"] == pytest.approx(0.75)

    with pytest.raises(ValueError):
        kernel_constants(lag_kernel("truncated"), time_kernel("epanechnikov"))


# ---------------------------------------------------------------------------
# time kernels


def test_epanechnikov_shape():
    epan = time_kernel("epanechnikov")
    xs = np.linspace(0.0, 1.0, 201)
    vals = np.array([epan(x) for x in xs])
    assert_allclose(vals, 6.0 * xs * (1.0 - xs), rtol=0, atol=1e-15)
    assert epan(-0.01) == 0.0
    assert epan(1.01) == 0.0
    # Unit mass on [0, 1]: midpoint rule on a fine grid.
    mids = (xs[:-1] + xs[1:]) / 2.0
    mass = np.mean([epan(x) for x in mids])
    assert mass == pytest.approx(1.0, abs=1e-4)
    assert epan.conforming


def test_uniform_time_kernel():
    uni = time_kernel("uniform")
    assert uni(0.0) == 1.0
    assert uni(1.0) == 1.0
    assert uni(1.0001) == 0.0
    assert not uni.conforming
    with pytest.raises(ValueError):
        time_kernel("triangular")


def test_k2_star_weight_matches_reference():
    epan = time_kernel("epanechnikov")
    T, b2 = 24, 0.4
    rng = np.random.default_rng(7)
    for _ in range(60):
        anchor = int(rng.integers(4, T + 1))
        k = int(rng.integers(-5, 6))
        s = int(rng.integers(max(1, 1 + max(0, -k)), T - max(0, k) + 1))
        got = k2_star_weight(epan, anchor, s, k, T, b2)
        want = oracles.k2_star(oracles.k2_quadratic, anchor, s, k, T, b2)
        assert got == pytest.approx(want, abs=1e-14), (anchor, s, k)


def test_k2_star_factorizes_through_taper():
    # K2*(anchor, s, k) must equal g(s) g(s-k) with g the square-root taper;
    # this factorization is what makes the quadratic form PSD.
    epan = time_kernel("epanechnikov")
    T, b2, anchor = 16, 0.6, 12
    g = taper_weights(epan, anchor, T, b2)
    for s in range(3, T + 1):
        for k in range(0, 3):
            w = k2_star_weight(epan, anchor, s, k, T, b2)
            assert w == pytest.approx(g[s - 1] * g[s - k - 1], abs=1e-14)


def test_taper_weights_window():
    epan = time_kernel("epanechnikov")
    T, b2, anchor = 20, 0.25, 10
    g = taper_weights(epan, anchor, T, b2)
    assert g.shape == (T,)
    # Support is anchor - T b2 < s <= anchor, here (5, 10].
    assert np.all(g[: 5] == 0.0)
    assert np.all(g[10:] == 0.0)
    inside = np.arange(6, 11)
    want = np.sqrt([oracles.k2_quadratic((anchor - s) / (T * b2)) for s in inside])
    assert_allclose(g[5:10], want, rtol=0, atol=1e-15)


def test_synthetic_lag_kernel_is_constructible():
    # The dataclass is part of the public surface so callers can plug in
    # their own taper; check the fields land where expected.
    flat = LagKernel("flat-top", 2, 0.5, 1.25, False, lambda x: 1.0 if abs(x) <= 2.0 else 0.0)
    assert flat(1.5) == 1.0
    assert flat.q == 2
    assert not flat.psd_generating
