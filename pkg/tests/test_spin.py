import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from twistlab.spin import (
    CollectiveOperators,
    DickeState,
    PositivityWarning,
    SpinDensityMatrix,
    apply_rotation,
    apply_twist,
    covariance_zy,
    make_css,
    make_dicke,
    moments,
    rotation_matrix,
    to_density_matrix,
    wigner_small_d,
)

atoms = st.integers(min_value=1, max_value=24)
angles = st.floats(min_value=-2 * math.pi, max_value=2 * math.pi, allow_nan=False)


def random_state(n, seed):
    rng = np.random.default_rng(seed)
    c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
    return DickeState(n, c / np.linalg.norm(c))


@pytest.mark.parametrize("n", [1, 2, 3, 8, 31, 64, 101])
@pytest.mark.parametrize("axis", ["x", "y", "z"])
@pytest.mark.parametrize("angle", [0.3, math.pi / 2, -2.1, math.pi])
def test_rotation_matches_expm(n, axis, angle):
    ops = CollectiveOperators.for_atoms(n)
    psi = random_state(n, n)
    ref = expm(-1j * angle * ops.dense(axis)) @ psi.amplitudes
    out = apply_rotation(psi, axis, angle).amplitudes
    assert np.max(np.abs(out - ref)) < 1e-11


def test_large_spin_rotation_is_unitary():
    n = 2000
    psi = apply_twist(make_css(n), 40.0)
    out = apply_rotation(psi, "y", 0.37)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-10
    back = apply_rotation(out, "y", -0.37)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-10


@given(atoms, angles)
@settings(max_examples=40, deadline=None)
def test_small_d_orthogonal_and_composes(n, angle):
    d = wigner_small_d(n, angle)
    assert np.allclose(d @ d.T, np.eye(n + 1), atol=1e-11)
    assert np.allclose(wigner_small_d(n, angle / 2) @ wigner_small_d(n, angle / 2), d, atol=1e-11)


def test_small_d_spin_half():
    b = 0.8
    d = wigner_small_d(1, b)
    # rows and columns ordered m = -1/2, +1/2
    expected = np.array([[math.cos(b / 2), math.sin(b / 2)], [-math.sin(b / 2), math.cos(b / 2)]])
    assert np.allclose(d, expected, atol=1e-14)


@pytest.mark.parametrize("n", [1, 4, 7])
def test_rotation_matrix_unitary(n):
    for axis in "xyz":
        u = rotation_matrix(n, axis, 1.1)
        assert np.allclose(u @ u.conj().T, np.eye(n + 1), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 5, 50, 1000])
def test_css_moments(n):
    css = make_css(n)
    s = n / 2
    assert moments(css, "Sx") == pytest.approx((s, 0.0), abs=1e-9 * max(1, s))
    for obs in ("Sy", "Sz"):
        mean, var = moments(css, obs)
        assert abs(mean) < 1e-9 * s
        assert var == pytest.approx(s / 2, rel=1e-10)


def test_dicke_state():
    st_ = make_dicke(4, 1)
    assert moments(st_, "Sz") == pytest.approx((1.0, 0.0))
    with pytest.raises(ValueError):
        make_dicke(4, 0.5)
    with pytest.raises(ValueError):
        make_dicke(4, 3)


@given(atoms, st.floats(min_value=0, max_value=50), st.integers(0, 2**16))
@settings(max_examples=40, deadline=None)
def test_twist_preserves_norm_and_sz(n, q, seed):
    psi = random_state(n, seed)
    out = apply_twist(psi, q)
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12
    assert np.allclose(np.abs(out.amplitudes), np.abs(psi.amplitudes))
    assert np.allclose(apply_twist(out, q, -1).amplitudes, psi.amplitudes, atol=1e-12)


@pytest.mark.parametrize("n", [2, 3, 6])
def test_twist_matches_expm(n):
    ops = CollectiveOperators.for_atoms(n)
    q = 1.7
    sz = ops.dense("z")
    psi = random_state(n, 11)
    ref = expm(-1j * (q / n) * sz @ sz) @ psi.amplitudes
    assert np.allclose(apply_twist(psi, q).amplitudes, ref, atol=1e-13)


def test_twist_rejects_negative():
    with pytest.raises(ValueError):
        apply_twist(make_css(3), -1.0)


@pytest.mark.parametrize("n", [1, 2, 5])
def test_commutators(n):
    ops = CollectiveOperators.for_atoms(n)
    x, y, z = (ops.dense(a) for a in "xyz")
    assert np.allclose(x @ y - y @ x, 1j * z)
    s = n / 2
    assert np.allclose(x @ x + y @ y + z @ z, s * (s + 1) * np.eye(n + 1))


@given(st.integers(1, 12), st.integers(0, 2**16), st.sampled_from(["Sx", "Sy", "Sz"]))
@settings(max_examples=40, deadline=None)
def test_moments_match_dense_and_density(n, seed, obs):
    psi = random_state(n, seed)
    op = CollectiveOperators.for_atoms(n).dense(obs[1])
    c = psi.amplitudes
    mean = np.vdot(c, op @ c).real
    var = np.vdot(c, op @ op @ c).real - mean**2
    assert moments(psi, obs) == pytest.approx((mean, var), abs=1e-10)
    assert moments(to_density_matrix(psi), obs) == pytest.approx((mean, var), abs=1e-10)


def test_covariance_of_css_and_twisted():
    vzz, vyy, czy = covariance_zy(make_css(10))
    assert (vzz, vyy, czy) == pytest.approx((2.5, 2.5, 0.0), abs=1e-12)
    vzz, vyy, czy = covariance_zy(apply_twist(make_css(100), 5.0))
    # twisting leaves S_z alone and shears S_y
    assert vzz == pytest.approx(25.0)
    assert vyy > vzz and czy != 0


def test_density_rotation_consistent():
    psi = apply_twist(make_css(6), 2.0)
    rho = apply_rotation(to_density_matrix(psi), "x", 0.4)
    ref = to_density_matrix(apply_rotation(psi, "x", 0.4))
    assert np.allclose(rho.elements, ref.elements, atol=1e-13)


def test_state_validation():
    with pytest.raises(ValueError):
        DickeState(3, np.ones(3))
    with pytest.raises(ValueError):
        make_css(0)
    with pytest.raises(ValueError):
        apply_rotation(make_css(2), "w", 0.1)
    with pytest.raises(ValueError):
        apply_rotation(make_css(2), "x", float("nan"))


def test_density_matrix_checks():
    good = to_density_matrix(make_css(2)).elements
    SpinDensityMatrix(2, good).check()
    with pytest.raises(ValueError):
        SpinDensityMatrix(2, good * 2).check()
    with pytest.raises(ValueError):
        SpinDensityMatrix(2, good + 0.1j * np.triu(np.ones((3, 3)), 1)).check()
    with pytest.raises(ValueError):
        SpinDensityMatrix(2, np.eye(2))
    bad = np.diag([1.2, -0.2, 0.0]).astype(complex)
    with warnings.catch_warnings():
        warnings.simplefilter("error", PositivityWarning)
        with pytest.raises(PositivityWarning):
            SpinDensityMatrix(2, bad).check()
