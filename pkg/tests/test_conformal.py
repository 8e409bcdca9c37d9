import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kexpm.conformal import (
    SpectralBox,
    build_conformal,
    inverse_map,
    level_curve,
    level_integral,
    modulus_ratio,
    params_from_modulus,
    psi_minus_r,
    solve_modulus,
)
from kexpm.elliptic import complete_gap
from kexpm.errors import DegenerateBoxError, DomainError
from kexpm.problems import example2_box


def mp_ratio(m):
    with mpmath.workdps(50):
        m = mpmath.mpf(m)
        f = lambda p: mpmath.ellipe(p) - (1 - p) * mpmath.ellipk(p)  # noqa: E731
        return float(f(m) / f(1 - m))


@pytest.mark.parametrize("m", [1e-8, 0.01, 0.3, 0.5, 0.7, 0.99])
def test_modulus_ratio_against_mpmath(m):
    np.testing.assert_allclose(modulus_ratio(m), mp_ratio(m), rtol=1e-13)


def test_modulus_ratio_reciprocal():
    for m in np.linspace(0.01, 0.99, 25):
        np.testing.assert_allclose(modulus_ratio(m) * modulus_ratio(1 - m), 1.0, rtol=1e-13)


def test_solve_modulus_square():
    assert abs(solve_modulus(1.0) - 0.5) <= 1e-13


@pytest.mark.parametrize("rho", np.logspace(-3, 3, 50))
def test_solve_modulus_round_trip(rho):
    m = solve_modulus(rho)
    assert 0 < m < 1
    np.testing.assert_allclose(modulus_ratio(m), rho, rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.floats(1e-6, 1e6))
def test_solve_modulus_monotone(rho):
    assert solve_modulus(rho) <= solve_modulus(rho * 1.01)


@pytest.mark.parametrize("m", [0.01, 0.1, 0.9, 0.99])
def test_example2_box_round_trip(m):
    box = example2_box(m)
    cp = build_conformal(box)
    np.testing.assert_allclose(cp.m, m, rtol=1e-12)
    np.testing.assert_allclose(cp.lam, 1.0, rtol=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0, math.inf, math.nan])
def test_solve_modulus_domain(bad):
    with pytest.raises(DomainError):
        solve_modulus(bad)


def test_degenerate_box():
    with pytest.raises(DegenerateBoxError):
        build_conformal(SpectralBox(0.0, 1.0, 0.0))
    with pytest.raises(DomainError):
        SpectralBox(1.0, 0.0, 1.0)


def test_params_zero_modulus():
    cp = params_from_modulus(0.0, 2.0)
    assert cp.lam == 0.5 and cp.beta == 0.0 and cp.Kp == math.inf
    np.testing.assert_allclose(cp.capacity, 1.0)


def test_params_consistent():
    box = SpectralBox(-1.0, 3.0, 0.5)
    cp = build_conformal(box)
    np.testing.assert_allclose(cp.lam * cp.alpha, complete_gap(cp.m1), rtol=1e-14)
    np.testing.assert_allclose(cp.lam * cp.beta, complete_gap(cp.m), rtol=1e-12)
    np.testing.assert_allclose(cp.capacity, 1 / (2 * cp.lam))


@pytest.mark.parametrize("m", [0.0, 0.2, 0.9])
@pytest.mark.parametrize("upper", [0.3, 1.0, 5.0, 400.0])
def test_level_integral_against_mpmath(m, upper):
    ref = mpmath.quad(lambda t: mpmath.sqrt(m + t * t) / mpmath.sqrt(1 + t * t), [0, 1, upper])
    np.testing.assert_allclose(level_integral(m, upper), float(ref), rtol=1e-12)


def test_level_integral_limits():
    assert level_integral(0.5, 0.0) == 0.0
    # m = 0 has the closed form sqrt(1 + x^2) - 1
    np.testing.assert_allclose(level_integral(0.0, 3.0), math.sqrt(10) - 1, rtol=1e-13)


def _box_for(m):
    cp = params_from_modulus(m, 1.0)
    return cp, SpectralBox(-1.0, 1.0, cp.beta)


@pytest.mark.parametrize("m", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("r", [1.2, 2.0, 4.0])
def test_level_curve_leftmost_point(m, r):
    cp, box = _box_for(m)
    z = level_curve(cp, box, r, 256)
    assert np.argmin(z.real) == 128
    np.testing.assert_allclose(z.real.min(), psi_minus_r(cp, box, r), atol=1e-6)


@pytest.mark.parametrize("m", [0.1, 0.5, 0.9])
@pytest.mark.parametrize("r", [1.2, 2.0, 4.0])
def test_level_curve_symmetries(m, r):
    box = SpectralBox(3.0, 5.0, params_from_modulus(m, 1.0).beta)
    cp = build_conformal(box)
    w = level_curve(cp, box, r, 256) - box.center
    np.testing.assert_allclose(w[128:], -w[:128], atol=1e-6)
    np.testing.assert_allclose(w[1:], np.conj(w[1:][::-1]), atol=1e-6)


@pytest.mark.parametrize("m", [0.1, 0.5, 0.9])
def test_normalization_at_infinity(m):
    cp, box = _box_for(m)
    for R in (10.0, 100.0):
        for theta in (0.3, 2.0, 4.0):
            u = R * np.exp(1j * theta)
            z = inverse_map(cp, box, u)
            assert abs(u / (z - box.center) - 2 * cp.lam) <= 10 / R


def test_level_curves_nested_and_outside():
    box = SpectralBox(0.0, 2.0, 0.7)
    cp = build_conformal(box)
    lefts = [psi_minus_r(cp, box, r) for r in (1.05, 1.5, 3.0, 6.0)]
    assert lefts[0] < box.a and np.all(np.diff(lefts) < 0)
    for r in (1.05, 2.0):
        z = level_curve(cp, box, r, 64)
        inside = (z.real > box.a) & (z.real < box.b) & (np.abs(z.imag) < box.c)
        assert not inside.any()


def test_boundary_limit_hugs_rectangle():
    box = SpectralBox(0.0, 2.0, 0.7)
    cp = build_conformal(box)
    z = level_curve(cp, box, 1.0001, 64)
    dx = np.maximum(np.maximum(box.a - z.real, z.real - box.b), 0)
    dy = np.maximum(np.abs(z.imag) - box.c, 0)
    assert np.hypot(dx, dy).max() < 1e-3


def test_level_curve_domain():
    cp, box = _box_for(0.5)
    with pytest.raises(DomainError):
        level_curve(cp, box, 1.0, 64)
    with pytest.raises(DomainError):
        psi_minus_r(cp, box, 0.5)
    with pytest.raises(DomainError):
        inverse_map(cp, box, 0.5j)
