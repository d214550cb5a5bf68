import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twistlab.echo import (
    DetectionNoise,
    SlopeDomainWarning,
    analytic_slope,
    echo_state,
    gain_db,
    gain_sweep,
    noisy_sensitivity,
    numeric_slope,
    optimal_twisting,
    run_echo,
)
from twistlab.spin import make_css, moments


@pytest.mark.parametrize("n", [1, 2, 7, 100])
def test_echo_at_zero_phi_returns_css(n):
    out = echo_state(n, 3.0, 0.0)
    assert np.allclose(out.amplitudes, make_css(n).amplitudes, atol=1e-12)


def test_no_twist_gives_no_sy_signal():
    # R_y tips the x-polarised CSS towards z, so <S_y> stays zero
    for n in (2, 10, 101):
        assert abs(numeric_slope(n, 0.0)) < 1e-9 * n
        assert analytic_slope(n, 0.0) == 0.0
        assert run_echo(n, 0.0).delta_phi is None


@pytest.mark.parametrize(
    "n, q",
    [(n, q) for n in (2, 3, 10, 100, 1000) for q in (0.05, 0.5, 3.0, 20.0) if q <= 2 * math.sqrt(n)],
)
def test_numeric_slope_matches_closed_form(n, q):
    ref = analytic_slope(n, q)
    assert numeric_slope(n, q) == pytest.approx(ref, rel=1e-6)


def test_closed_form_slope_small_cases():
    # N = 2: S(2S-1) sin(Q/2) with S = 1
    assert analytic_slope(2, 1.2) == pytest.approx(math.sin(0.6))
    # N = 1: factor 2S - 1 vanishes
    assert analytic_slope(1, 0.7) == 0.0


def test_slope_domain_warning():
    with pytest.warns(SlopeDomainWarning):
        analytic_slope(10, 10 * 2.0)


@pytest.mark.parametrize("n, expected", [(2, math.pi), (3, 3 * math.atan(1))])
def test_optimal_twisting_small(n, expected):
    q_opt, dphi = optimal_twisting(n)
    assert q_opt == pytest.approx(expected)
    assert dphi > 0


def test_two_atom_optimum_by_scan():
    grid = np.linspace(0.1, 2 * math.pi - 0.1, 2001)
    dphi = [run_echo(2, q).delta_phi for q in grid]
    assert grid[int(np.argmin(dphi))] == pytest.approx(math.pi, abs=5e-3)


def test_optimal_twisting_is_a_maximum():
    n = 300
    q_opt, dphi = optimal_twisting(n)
    for q in (0.97 * q_opt, 1.03 * q_opt):
        assert run_echo(n, q).delta_phi > dphi * (1 - 1e-9)
    assert run_echo(n, q_opt).delta_phi == pytest.approx(dphi, rel=1e-7)


def test_heisenberg_scaling_trend():
    scaled = [n * optimal_twisting(n)[1] for n in (100, 300, 1000, 3000)]
    assert all(a > b for a, b in zip(scaled, scaled[1:]))
    assert scaled[-1] == pytest.approx(math.sqrt(math.e), rel=1e-3)


def test_echo_variance_is_css_at_phi_zero():
    res = run_echo(500, 25.0)
    assert res.var_Sy == pytest.approx(125.0, rel=1e-9)
    assert abs(res.mean_Sy) < 1e-9
    assert res.gain_G == pytest.approx(res.slope / 250)


def test_undefined_sensitivity_is_none():
    # N = 2 at Q = 2 pi: sin(Q/2S) = 0, no signal
    res = run_echo(2, 2 * math.pi)
    assert res.delta_phi is None and res.metrological_gain_db is None
    assert gain_db(10, None) is None


def test_gain_db_conventions():
    n = 1000
    assert gain_db(n, 1 / math.sqrt(n)) == pytest.approx(0.0, abs=1e-12)
    assert gain_db(n, 1 / n) == pytest.approx(30.0)


@given(st.floats(min_value=0, max_value=20))
@settings(max_examples=30, deadline=None)
def test_detection_noise_factor(r):
    n = 400
    q = optimal_twisting(n)[0]
    base = run_echo(n, q).delta_phi
    noisy = noisy_sensitivity(n, q, DetectionNoise(r))
    assert noisy / base == pytest.approx(math.sqrt(1 + r**2), rel=1e-9)


def test_detection_noise_conversions():
    noise = DetectionNoise.from_delta_n(1000, math.sqrt(1000))
    assert noise.r_det == pytest.approx(1.0)
    assert noise.delta_n(1000) == pytest.approx(math.sqrt(1000))
    with pytest.raises(ValueError):
        DetectionNoise(-0.1)
    with pytest.raises(ValueError):
        DetectionNoise.from_delta_n(10, -1)


def test_gain_sweep_rows():
    rows = gain_sweep(100, q_grid=[0.5, 5.0, 50.0])
    assert [r["Q"] for r in rows] == [0.5, 5.0, 50.0]
    assert all(set(r) >= {"gain_db", "delta_phi", "gain_linear"} for r in rows)
    noise_rows = gain_sweep(100, noise_grid=[0.0, 10.0])
    assert noise_rows[0]["gain_db"] > noise_rows[1]["gain_db"]
    with pytest.raises(ValueError):
        gain_sweep(100, q_grid=[])
    with pytest.raises(ValueError):
        gain_sweep(100, noise_grid=[])


def test_signal_is_odd_in_phi():
    n, q = 50, 4.0
    up = moments(echo_state(n, q, 0.01), "Sy")[0]
    down = moments(echo_state(n, q, -0.01), "Sy")[0]
    assert up == pytest.approx(-down, rel=1e-10)


def test_run_echo_validation():
    with pytest.raises(ValueError):
        run_echo(0, 1.0)
    with pytest.raises(ValueError):
        run_echo(10, -1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run_echo(10, 1.0)
