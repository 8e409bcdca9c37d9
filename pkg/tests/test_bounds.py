import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize

from kexpm.bounds import (
    ConvergenceRecord,
    apriori_bound,
    apriori_log,
    apriori_nonhermitian,
    apriori_skew,
    aposteriori_estimate,
    bound_curve,
    candidate_rates,
    cg_rate,
    crude_q,
    crude_tilde_z,
    hl_disk_bound,
    hl_skew_bound,
    make_context,
    optimal_q_nonhermitian,
    optimal_q_skew,
    q_equation,
    reference_bounds,
    saad_bound,
    simpson,
    skew_quartic,
    spectral_box,
    threshold_q,
    threshold_q_m0,
    tilde_z,
)
from kexpm.conformal import SpectralBox, build_conformal, psi_minus_r
from kexpm.errors import DegenerateBoxError, DomainError
from kexpm.krylov import KrylovProcess, arnoldi, krylov_approx, lanczos
from kexpm.problems import lattice_normal_matrix, reference_solution


def test_spectral_box_dense():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((30, 30)) + 1j * rng.standard_normal((30, 30))
    box = spectral_box(A)
    # field of values samples stay inside the box
    for _ in range(200):
        x = rng.standard_normal(30) + 1j * rng.standard_normal(30)
        x /= np.linalg.norm(x)
        r = np.vdot(x, A @ x)
        assert box.a - 1e-12 <= r.real <= box.b + 1e-12
        assert abs(r.imag) <= box.c + 1e-12
    assert not box.estimated


def test_spectral_box_hermitian_has_no_height():
    B = np.random.default_rng(1).standard_normal((10, 10))
    box = spectral_box(B + B.T)
    assert box.c == 0.0
    np.testing.assert_allclose([box.a, box.b], np.linalg.eigvalsh(B + B.T)[[0, -1]])


def test_spectral_box_sparse_estimate_encloses():
    p = lattice_normal_matrix(47, SpectralBox(0.5, 3.0, 2.0))
    assert p.n > 2000
    box = spectral_box(p.operator)
    assert box.estimated
    exact = p.box_exact
    x, y = p.data["x"], p.data["y"]
    assert box.a <= x.min() and box.b >= x.max() and box.c >= y.max()
    np.testing.assert_allclose([box.a, box.b, box.c], [exact.a, exact.b, y.max()], atol=0.02 * 3.0)


def test_context_validation():
    box = SpectralBox(0.0, 2.0, 1.0)
    with pytest.raises(DomainError):
        make_context(box, 0.0, 3.0)
    with pytest.raises(DomainError):
        make_context(box, 1.0, 1.5)  # norm below the box extent
    with pytest.raises(DomainError):
        make_context(box, 1.0, 3.0, mode="other")
    with pytest.raises(DomainError):
        make_context(box, 1.0, 3.0, simpson_n=3)
    ctx = make_context(box, 1.0, 3.0)
    assert ctx.nu == 0.0 and ctx.cp is not None and ctx.krylov_mode == "exp"
    assert make_context(box, 1.0, 3.0, mode="skew").krylov_mode == "unitary"


def test_degenerate_contexts():
    herm = make_context(SpectralBox(1.0, 3.0, 0.0), 2.0, 3.0)
    assert herm.degenerate == "hermitian" and herm.cp.m == 0.0
    bound, q = apriori_bound(herm, 10)
    assert 0 < bound < math.inf and 0 < q < 1
    shifted = make_context(SpectralBox(1.0, 1.0, 2.0), 2.0, 3.0)
    assert shifted.degenerate == "shifted-skew" and shifted.cp is None
    with pytest.raises(DegenerateBoxError):
        apriori_log(shifted, 3, 0.5)
    bound, _ = apriori_bound(shifted, 10)
    # e^{-tau a} times the skew bound with rho = c/2
    expected = math.exp(-2.0) * apriori_bound(make_context(SpectralBox(-2.0, 2.0, 0.0), 2.0, 3.0,
                                                           mode="skew"), 10)[0]
    np.testing.assert_allclose(bound, expected, rtol=1e-12)


def test_simpson_matches_scipy():
    np.testing.assert_allclose(simpson(np.linspace(0, 2, 11) ** 2, 2.0), 8 / 3, rtol=1e-14)
    with pytest.raises(DomainError):
        simpson([1.0, 2.0], 1.0)


def _dense_estimate(A, dec, tau, n_quad):
    """h_next * int_0^tau |e_k^T exp(-t H) e_1| dt by adaptive quadrature."""
    H, k = dec.H, dec.k
    f = lambda t: abs(scipy.linalg.expm(-t * H)[k - 1, 0])  # noqa: E731
    return dec.beta0 * dec.h_next * integrate.quad(f, 0, tau, limit=n_quad, epsabs=0, epsrel=1e-10)[0]


@pytest.mark.parametrize("k", [3, 8, 15])
def test_aposteriori_converges_to_integral(k):
    rng = np.random.default_rng(k)
    A = rng.standard_normal((60, 60)) / 8 + np.eye(60)
    v = rng.standard_normal(60)
    dec = arnoldi(A, v, k)
    ref = _dense_estimate(A, dec, 1.5, 200)
    # h(t) carries ~1e-16 absolute round-off near t = 0
    np.testing.assert_allclose(aposteriori_estimate(dec, 1.5, simpson_n=400), ref, rtol=1e-6, atol=1e-15)
    assert aposteriori_estimate(dec, 1.5, simpson_n=10) == pytest.approx(ref, rel=0.2)


def test_aposteriori_zero_after_breakdown():
    A = np.diag(np.arange(1.0, 7.0))
    dec = arnoldi(A, np.r_[1.0, 1.0, 0, 0, 0, 0], 6)
    assert dec.breakdown and aposteriori_estimate(dec, 3.0) == 0.0


def test_aposteriori_negative_nu_factor():
    rng = np.random.default_rng(2)
    A = rng.standard_normal((30, 30)) / 6
    dec = arnoldi(A, np.ones(30), 5)
    base = aposteriori_estimate(dec, 2.0, nu=0.0)
    np.testing.assert_allclose(aposteriori_estimate(dec, 2.0, nu=-0.5), base * math.exp(1.0))
    assert aposteriori_estimate(dec, 2.0, nu=0.3) == base


def test_aposteriori_unitary_spread():
    d = np.linspace(0, 1, 100)
    dec = lanczos(np.diag(d), np.ones(100), 6)
    plain = aposteriori_estimate(dec, 3.0, mode="unitary")
    wide = aposteriori_estimate(dec, 3.0, mode="unitary", spread=1.0)
    np.testing.assert_allclose(wide / plain, 0.5 / dec.h_next)


def test_tilde_z_matches_level_curve():
    box = SpectralBox(0.5, 2.5, 1.0)
    cp = build_conformal(box)
    for q in (0.2, 0.5, 0.9):
        np.testing.assert_allclose(tilde_z(cp, box.a, q), psi_minus_r(cp, box, 1 / q), rtol=1e-14)
        assert crude_tilde_z(cp, box.a, q) <= tilde_z(cp, box.a, q)
    with pytest.raises(DomainError):
        tilde_z(cp, box.a, 1.0)


def test_crude_and_threshold_rates():
    box = SpectralBox(0.5, 2.5, 1.0)
    cp = build_conformal(box)
    q1 = crude_q(cp, box.a)
    assert abs(crude_tilde_z(cp, box.a, q1)) <= 1e-14
    q0 = threshold_q(box.a * cp.lam, cp.m)
    assert abs(tilde_z(cp, box.a, q0)) <= 1e-13
    assert q0 <= q1  # crude_tilde_z <= tilde_z, both increasing in q


def test_threshold_clips_for_tiny_left_edge():
    assert threshold_q(1e-150, 0.3) == 1.0 - 1e-12


def test_threshold_matches_cg_rate():
    assert abs(threshold_q_m0(100.0, 1e-6) - 9 / 11) <= 0.01
    assert abs(threshold_q_m0(100.0, 1e-10) - cg_rate(100.0)) < 1e-3
    assert cg_rate(1.0) == 0.0
    with pytest.raises(DomainError):
        threshold_q_m0(0.5, 0.1)


@pytest.mark.parametrize("k", [2, 5, 20, 60])
@pytest.mark.parametrize("tau", [0.5, 5.0, 40.0])
def test_optimal_q_minimises_bound(k, tau):
    # a = 0 keeps tilde_z < 0 for every q, where the bound is smooth in q
    box = SpectralBox(0.0, 2.0, 0.8)
    ctx = make_context(box, tau, 3.0)
    q = optimal_q_nonhermitian(ctx, k)
    assert abs(q_equation(k, tau / (2 * ctx.cp.lam), ctx.cp.m, q)) <= 1e-10 * max(1, tau)
    res = optimize.minimize_scalar(lambda s: apriori_log(ctx, k, s), bounds=(1e-9, 1 - 1e-9),
                                   method="bounded", options={"xatol": 1e-12})
    assert apriori_log(ctx, k, q) <= res.fun + 1e-9


def test_apriori_formula():
    box = SpectralBox(-0.5, 1.5, 0.6)
    ctx = make_context(box, 2.0, 2.0, q_constant=2.0)
    q, k = 0.4, 7
    z = tilde_z(ctx.cp, box.a, q)
    expected = 2 * 2.0 * 2.0 * 2.0 * q ** (k - 1) / (1 - q) * math.exp(-2.0 * -0.5 - 2.0 * min(z, 0))
    np.testing.assert_allclose(apriori_nonhermitian(ctx, k, q), expected, rtol=1e-13)


def test_candidate_rates_and_minimum():
    ctx = make_context(SpectralBox(0.5, 2.5, 1.0), 3.0, 3.0)
    qs = candidate_rates(ctx, 12)
    assert len(qs) == 3
    bound, q = apriori_bound(ctx, 12)
    assert q in qs
    np.testing.assert_allclose(bound, min(apriori_nonhermitian(ctx, 12, s) for s in qs))


def test_overflow_reported_as_inf():
    ctx = make_context(SpectralBox(-50.0, 0.0, 1.0), 30.0, 60.0)
    assert apriori_nonhermitian(ctx, 1, 0.5) == math.inf
    assert saad_bound(1e8, 100) == math.inf


def test_saad_bound():
    for tn, k in ((0.5, 1), (3.0, 7), (20.0, 40)):
        np.testing.assert_allclose(saad_bound(tn, k), 2 * tn**k / math.factorial(k), rtol=1e-12)
    assert saad_bound(0.0, 3) == 0.0


def test_hl_bounds():
    assert hl_disk_bound(1.0, 10.0, 19) is None
    np.testing.assert_allclose(hl_disk_bound(1.0, 10.0, 25),
                               12 * math.exp(-10) * (math.e * 10 / 25) ** 25, rtol=1e-12)
    assert hl_skew_bound(0.25, 20.0, 9) is None
    np.testing.assert_allclose(hl_skew_bound(0.25, 20.0, 12),
                               12 * math.exp(-25 / 12) * (math.e * 5 / 12) ** 12, rtol=1e-12)


def test_reference_bounds_routing():
    box = SpectralBox(0.0, 1.0, 0.5)
    ctx = make_context(box, 2.0, 1.5)
    saad, hl = reference_bounds(ctx, 5)
    assert hl is None and saad > 0
    assert reference_bounds(make_context(box, 2.0, 1.5, rho_disk=1.0), 5)[1] is not None
    skew = make_context(SpectralBox(0.0, 1.0, 0.0), 4.0, 1.0, mode="skew")
    assert skew.rho_skew == 0.25
    np.testing.assert_allclose(reference_bounds(skew, 5)[1], hl_skew_bound(0.25, 4.0, 5))


def test_skew_quartic_root_minimises():
    for tr, k in ((1.0, 4), (5.0, 12), (12.5, 40)):
        q = optimal_q_skew(tr, k)
        assert abs(skew_quartic(tr, k, q)) <= 1e-10 * max(tr, k)
        branch = lambda s: -math.log1p(-s * s) - math.log1p(-s) + k * math.log(s) + tr * (1 / s - s)  # noqa: E731
        res = optimize.minimize_scalar(branch, bounds=(1e-9, 1 - 1e-9), method="bounded",
                                       options={"xatol": 1e-12})
        np.testing.assert_allclose(q, res.x, atol=1e-6)


@pytest.mark.parametrize("tau", [2.0, 10.0, 20.0, 50.0])
def test_simplified_q_stagnation_onset(tau):
    tr = tau * 0.25
    flat = [k for k in range(1, 200) if optimal_q_skew(tr, k, "simplified") == 1.0]
    assert flat == list(range(1, int(2 * tr) + 1))
    q = optimal_q_skew(tr, int(2 * tr) + 1, "simplified")
    assert q < 1.0


def test_skew_bound_overflow_and_zero():
    assert apriori_skew(0.0, 1.0, 3, 0.5) == 0.0
    assert apriori_skew(100.0, 100.0, 1, 1e-6) == math.inf
    with pytest.raises(DomainError):
        apriori_skew(-1.0, 1.0, 3, 0.5)


@pytest.mark.parametrize("tr", [1.0, 5.0, 12.5])
def test_skew_bound_implies_hl(tr):
    for k in range(math.ceil(2 * tr), 201):
        mine = apriori_skew(tr, 1.0, k, tr / k)
        theirs = 12 * math.exp(-tr * tr / k) * (math.e * tr / k) ** k
        assert mine <= theirs * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-1.0, 2.0),
    st.floats(0.2, 3.0),
    st.floats(0.1, 3.0),
    st.floats(0.5, 12.0),
    st.integers(0, 2**16),
)
def test_bound_dominates_error_on_random_boxes(a, width, c, tau, seed):
    p = lattice_normal_matrix(11, SpectralBox(a, a + width, c), seed=seed)
    ctx = make_context(spectral_box(p.operator), tau, p.operator.norm_estimate)
    dec = KrylovProcess(p.operator, p.v, 40).run().decomposition()
    ref = reference_solution(p, tau)
    for row in bound_curve(ctx, dec, range(1, 41), False, ref):
        if row.err_true >= 1e-12:
            assert row.bnd_prior >= row.err_true * (1 - 1e-8), row


def test_skew_bound_dominates_error():
    d = np.linspace(0.0, 1.0, 300)
    v = np.random.default_rng(4).standard_normal(300)
    v /= np.linalg.norm(v)
    for tau in (3.0, 30.0):
        ctx = make_context(SpectralBox(0.0, 1.0, 0.0), tau, 1.0, mode="skew")
        dec = lanczos(np.diag(d), v, 60)
        ref = np.exp(1j * tau * d) * v
        for row in bound_curve(ctx, dec, range(1, 61), True, ref):
            if row.err_true >= 1e-12:
                assert row.bnd_prior >= row.err_true


def test_bound_curve_rows():
    p = lattice_normal_matrix(9, SpectralBox(0.0, 1.0, 0.5))
    ctx = make_context(spectral_box(p.operator), 2.0, p.operator.norm_estimate)
    dec = KrylovProcess(p.operator, p.v, 12).run().decomposition()
    rows = bound_curve(ctx, dec, range(1, 20), True, reference_solution(p, 2.0))
    assert [r.k for r in rows] == list(range(1, 13))
    assert all(isinstance(r, ConvergenceRecord) and r.bnd_hl is None for r in rows)
    w = krylov_approx(dec.truncate(5), 2.0)
    np.testing.assert_allclose(rows[4].err_true, np.linalg.norm(reference_solution(p, 2.0) - w))
    hess = bound_curve(ctx, dec, range(1, 6), False, None, box_source="hessenberg")
    assert all(r.err_true is None and r.bnd_saad is None for r in hess)
    with pytest.raises(DomainError):
        bound_curve(ctx, dec, [1], box_source="guess")
