import numpy as np
import pytest

from glpattern import (FarField, GLParams, Grid2D, Inhomogeneity, StateAP, c1_flux_balance,
                       c1_of_phi, g_hat, make_params, phase_from_gradient, reconstruct_A,
                       residual_ap, residual_complex, selected_phase, zero_state)
from glpattern.grid import derivatives


# --- parameters -------------------------------------------------------------

def test_make_params_k_half():
    p = make_params(0.5)
    assert p.alpha == pytest.approx(3.0)
    assert p.tau**2 == pytest.approx(0.75)
    assert p.a == pytest.approx(1.5)
    assert p.b == pytest.approx(1.0)


def test_make_params_rejects_eckhaus_margin():
    with pytest.raises(ValueError, match="Eckhaus"):
        make_params(0.577)
    with pytest.raises(ValueError, match="Eckhaus"):
        make_params(-0.58)


def test_make_params_rejects_tiny_k():
    with pytest.raises(ValueError, match="k_min"):
        make_params(1e-5)


def test_alpha_limit_small_k():
    assert GLParams(0.0).alpha == 1.0
    assert GLParams(1e-3).alpha == pytest.approx(1.0, abs=1e-5)
    # p1 coefficient equals (1 - alpha)/(2 b alpha) where defined, finite at 0
    p = GLParams(0.3)
    assert p.p1_coeff == pytest.approx((1 - p.alpha) / (2 * p.b * p.alpha))
    assert GLParams(0.0).p1_coeff == pytest.approx(-0.25)


# --- inhomogeneity ----------------------------------------------------------

def test_inhomogeneity_validation():
    with pytest.raises(ValueError):
        Inhomogeneity(sigma=0.0)
    with pytest.raises(ValueError):
        Inhomogeneity(kind="sombrero")
    with pytest.raises(ValueError):
        Inhomogeneity(kind="tabulated")


def test_gaussian_transform_oracle(grid20):
    g = Inhomogeneity(amplitude=2.0, sigma=1.5)
    k = 0.3
    got = g_hat(g, k, grid20)
    oracle = 2.0 * 2 * np.pi * 1.5**2 * np.exp(-((k * 1.5) ** 2) / 2)
    assert got == pytest.approx(oracle, rel=1e-6)
    assert got == pytest.approx(g.transform(k), rel=1e-6)


def test_g_hat_zero_and_shift(grid20):
    assert g_hat(Inhomogeneity(amplitude=0.0), 0.3, grid20) == 0.0
    base = g_hat(Inhomogeneity(), 0.3, grid20)
    shifted = g_hat(Inhomogeneity(kind="shifted_gaussian", center=(2.0, 0.0)), 0.3, grid20)
    assert shifted == pytest.approx(base * np.exp(-0.6j), rel=1e-8)


def test_tabulated_matches_gaussian(grid20):
    g = Inhomogeneity()
    tab = Inhomogeneity(kind="tabulated", table=g.sample(grid20).real)
    assert g_hat(tab, 0.3, grid20) == pytest.approx(g_hat(g, 0.3, grid20), rel=1e-12)
    assert tab.transform(0.3) is None


# --- c1 and phase selection -------------------------------------------------

def test_c1_even_real_gaussian_vanishes_at_zero(grid20, params03):
    assert abs(c1_of_phi(Inhomogeneity(), params03, grid20, 0.0)) <= 1e-12


def test_c1_gaussian_closed_form(grid20):
    k = 0.3
    p = GLParams(k)
    got = c1_of_phi(Inhomogeneity(), p, grid20, np.pi / 2)
    oracle = -(2.0 * np.sqrt(1 - 3 * k * k) / (1 - k * k)) * np.exp(-k * k / 2)
    assert got == pytest.approx(oracle, rel=1e-6)


def test_c1_antisymmetry(grid20, params03, rng):
    g = Inhomogeneity(amplitude=complex(0.7, -0.4), center=(1.0, -2.0), sigma=1.3,
                      kind="complex_gaussian")
    for phi in rng.uniform(0, 2 * np.pi, 5):
        assert c1_of_phi(g, params03, grid20, phi) == pytest.approx(
            -c1_of_phi(g, params03, grid20, phi + np.pi), abs=1e-12)


def test_c1_sinusoid_fit(grid20, params03):
    g = Inhomogeneity(amplitude=complex(1.0, 0.5), center=(0.7, 0.3), sigma=1.2,
                      kind="complex_gaussian")
    phis = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    vals = np.array([c1_of_phi(g, params03, grid20, p) for p in phis])
    basis = np.column_stack([np.cos(phis), np.sin(phis)])
    coef, *_ = np.linalg.lstsq(basis, vals, rcond=None)
    assert np.max(np.abs(basis @ coef - vals)) <= 1e-8


def test_c1_flux_balance_ratio(grid20, params03):
    # the two leading-order constants differ by exactly -k tau alpha / 2
    g = Inhomogeneity()
    for phi in (0.3, 1.2, np.pi / 2):
        paper = c1_of_phi(g, params03, grid20, phi)
        star = c1_flux_balance(g, params03, grid20, phi)
        k, tau, al = params03.k, params03.tau, params03.alpha
        assert star == pytest.approx(-paper * k * tau * al / 2.0, rel=1e-10)


def _ang_dist(a, b):
    return abs((a - b + np.pi) % (2 * np.pi) - np.pi)


def test_selected_phase_cases(grid20, params03):
    sel = selected_phase(Inhomogeneity(), params03, grid20)
    assert _ang_dist(sel["phi1"], 0.0) <= 1e-10
    assert _ang_dist(sel["phi2"], np.pi) <= 1e-10
    assert sel["slope1"] < 0 < sel["slope2"]

    sel_i = selected_phase(Inhomogeneity(kind="complex_gaussian", amplitude=1j), params03, grid20)
    assert _ang_dist(sel_i["phi1"], np.pi / 2) <= 1e-10
    assert _ang_dist(sel_i["phi2"], 3 * np.pi / 2) <= 1e-10

    sel_s = selected_phase(Inhomogeneity(center=(2.0, 0.0)), params03, grid20)
    assert _ang_dist(sel_s["phi1"], -0.6) <= 1e-8

    with pytest.raises(ValueError, match="degenerate"):
        selected_phase(Inhomogeneity(amplitude=0.0), params03, grid20)


# --- residuals and reconstruction -------------------------------------------

def test_zero_state_zero_residual(grid20, params03, gaussian):
    st = zero_state(grid20)
    ra, rp = residual_ap(st, params03, gaussian, grid20)
    assert np.max(np.abs(ra)) == 0.0
    assert np.max(np.abs(rp)) == 0.0


def test_constant_amplitude_shift(grid20, gaussian):
    p = GLParams(0.3, eps=0.0)
    delta = 0.07
    st = zero_state(grid20)
    st.s = np.full(grid20.shape, delta)
    ra, rp = residual_ap(st, p, gaussian, grid20)
    tau = p.tau
    expect = -2 * tau**2 * delta - 3 * tau * delta**2 - delta**3
    assert np.allclose(ra, expect, atol=1e-12)
    assert np.allclose(rp, 0.0, atol=1e-12)


def test_zero_state_forced_residual(grid20):
    p = GLParams(0.3, eps=0.01, phi0=0.4)
    g = Inhomogeneity(amplitude=complex(0.8, 0.1))
    st = zero_state(grid20)
    ra, rp = residual_ap(st, p, g, grid20)
    X, _ = grid20.meshgrid()
    ghat = g.sample(grid20) * np.exp(-1j * (p.k * X + p.phi0))
    assert np.allclose(ra, 0.01 * ghat.real, atol=1e-14)
    assert np.allclose(rp, 0.01 * ghat.imag / p.tau, atol=1e-14)


def test_amplitude_floor_rejected(grid20, params03, gaussian):
    st = zero_state(grid20)
    st.s = np.full(grid20.shape, -0.95 * params03.tau)
    with pytest.raises(ValueError, match="amplitude"):
        residual_ap(st, params03, gaussian, grid20)


def test_reconstruct_roll_and_offset(grid20, params03):
    p = GLParams(0.3, phi0=0.25)
    st = zero_state(grid20)
    A = reconstruct_A(st, p, grid20)
    X, Y = grid20.meshgrid()
    assert np.allclose(A, p.tau * np.exp(1j * (p.k * X + 0.25)), atol=1e-13)

    st.phi_inf = 0.3
    A = reconstruct_A(st, p, grid20)
    rho = np.sqrt(p.alpha * X**2 + Y**2)
    far = rho >= 1.0
    phase = np.angle(A * np.exp(-1j * p.k * X))
    expect = np.angle(np.exp(1j * (0.25 + 0.3)))
    assert np.allclose(phase[far], expect, atol=1e-12)
    assert np.allclose(np.abs(A), p.tau, atol=1e-13)


def test_residual_complex_cases(grid20, params03, gaussian):
    X, _ = grid20.meshgrid()
    p = GLParams(0.3, eps=0.0)
    roll = p.tau * np.exp(1j * p.k * X)
    r = residual_complex(roll, p, gaussian, grid20)
    assert np.max(np.abs(r[1:-1, 1:-1])) <= 1e-2  # stencil error only

    wrong = np.exp(1j * p.k * X)  # |A| = 1 so the cubic cancels A
    r2 = residual_complex(wrong, p, gaussian, grid20)
    assert np.allclose(r2[1:-1, 1:-1], -p.k**2 * wrong[1:-1, 1:-1], atol=1e-3)

    p3 = GLParams(0.3, eps=0.05)
    r3 = residual_complex(np.zeros(grid20.shape, complex), p3, gaussian, grid20)
    assert np.allclose(r3, 0.05 * gaussian.sample(grid20), atol=1e-14)


def _random_smooth_state(grid, rng, ff):
    X, Y = grid.meshgrid()
    def bump(cx, cy, w, amp):
        return amp * np.exp(-((X - cx) ** 2 + (Y - cy) ** 2) / w**2)
    s = bump(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 5), rng.uniform(-0.05, 0.05))
    phi = bump(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(3, 6), rng.uniform(-0.1, 0.1))
    return StateAP(s=s, phi_loc=phi, c=rng.uniform(-0.02, 0.02),
                   phi_inf=rng.uniform(-0.1, 0.1), farfield=ff)


def test_gauge_consistency_polar_vs_complex(params03, gaussian, rng, solver_ff):
    # complex residual at reconstruct_A maps to (R_amp, E * R_phase) within O(h^2)
    grid = Grid2D(20.0, 161)
    p = GLParams(0.3, eps=0.01, phi0=0.2)
    for _ in range(3):
        st = _random_smooth_state(grid, rng, solver_ff)
        ra, rp = residual_ap(st, p, gaussian, grid)
        A = reconstruct_A(st, p, grid)
        rc = residual_complex(A, p, gaussian, grid)
        X, _ = grid.meshgrid()
        phase = np.angle(A)
        rot = rc * np.exp(-1j * phase)
        E = np.abs(A)
        inner = (slice(2, -2), slice(2, -2))
        assert np.max(np.abs(rot.real - ra)[inner]) <= 1e-3
        assert np.max(np.abs(rot.imag - E * rp)[inner]) <= 1e-3


def test_gauge_consistency_h2_scaling(params03, gaussian, solver_ff):
    rngs = [np.random.default_rng(5), np.random.default_rng(5)]
    errs = []
    for n, rng in zip((81, 161), rngs):
        grid = Grid2D(20.0, n)
        st = _random_smooth_state(grid, rng, solver_ff)
        p = GLParams(0.3, eps=0.01)
        ra, _ = residual_ap(st, p, gaussian, grid)
        rc = residual_complex(reconstruct_A(st, p, grid), p, gaussian, grid)
        rot = rc * np.exp(-1j * np.angle(reconstruct_A(st, p, grid)))
        errs.append(np.max(np.abs(rot.real - ra)[2:-2, 2:-2]))
    assert errs[1] <= 0.35 * errs[0]  # second-order-ish decay


# --- phase reconstruction ----------------------------------------------------

def test_phase_from_gradient_zero(grid20, params03):
    z = np.zeros(grid20.shape)
    out = phase_from_gradient(z, z, params03, grid20, phi0=0.37)
    assert np.allclose(out, 0.37, atol=1e-14)


def test_phase_from_gradient_recovers_potential(params03):
    # analytic gradient input isolates the ray-quadrature error, which is
    # dominated by the bilinear interpolation and so scales like h^2
    errs = []
    for n in (161, 321):
        grid = Grid2D(20.0, n)
        X, Y = grid.meshgrid()
        w2 = 12.0
        w = np.exp(-((X - 1.0) ** 2 + (Y + 0.5) ** 2) / w2)
        ktau = 2 * params03.k * params03.tau
        wx = -2.0 * (X - 1.0) / w2 * w
        wy = -2.0 * (Y + 0.5) / w2 * w
        out = phase_from_gradient(ktau * wx, ktau * wy, params03, grid, phi0=0.1)
        expect = 0.1 + w - w[grid.origin_index()]
        errs.append(np.max(np.abs(out - expect)))
    assert errs[1] <= 1e-3
    assert errs[1] <= 0.35 * errs[0]


def test_phase_from_gradient_linearity(grid20, params03, rng):
    X, Y = grid20.meshgrid()
    p1 = np.exp(-(X**2 + Y**2) / 9.0)
    p2 = X * np.exp(-(X**2 + Y**2) / 16.0)
    a, b = 1.7, -0.6
    lhs = phase_from_gradient(a * p1 + b * p2, a * p2 + b * p1, params03, grid20, 0.0)
    r1 = phase_from_gradient(p1, p2, params03, grid20, 0.0)
    r2 = phase_from_gradient(p2, p1, params03, grid20, 0.0)
    assert np.allclose(lhs, a * r1 + b * r2, atol=1e-11)
