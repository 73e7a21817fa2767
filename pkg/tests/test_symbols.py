import numpy as np
import pytest

from glpattern import (GLParams, Grid2D, L_symbol_eigs, M_symbol_report, ModeGrid,
                       TestFieldSextuple, bordering_integral, cokernel_pairing,
                       eckhaus_report, random_bump_pair)
from glpattern.correctors import FarField
from glpattern.symbols import symbol_matrix


def test_symbol_eigs_origin(params03):
    l1, l2 = L_symbol_eigs(0.0, 0.0, params03)
    assert l1 == pytest.approx(0.0, abs=1e-14)
    assert l2 == pytest.approx(-2 * params03.tau**2, abs=1e-14)


def test_symbol_eigs_large_q(params03):
    l1, l2 = L_symbol_eigs(300.0, 400.0, params03)
    q2 = 250000.0
    assert l1.real == pytest.approx(-q2, rel=1e-3)
    assert l2.real == pytest.approx(-q2, rel=1e-3)


def test_symbol_eigs_are_characteristic_roots(params03, rng):
    # closed form matches the 2x2 matrix eigenvalues to 1e-12
    for _ in range(20):
        xi, eta = rng.uniform(-4, 4, 2)
        M = symbol_matrix(xi, eta, params03)
        lams = L_symbol_eigs(xi, eta, params03)
        for lam in lams:
            det = np.linalg.det(M - lam * np.eye(2))
            assert abs(det) <= 1e-12 * max(1.0, np.linalg.norm(M) ** 2)


def test_symbol_conjugation_symmetry(params03, rng):
    for _ in range(10):
        xi, eta = rng.uniform(-3, 3, 2)
        a = L_symbol_eigs(xi, eta, params03)
        b = L_symbol_eigs(-xi, -eta, params03)
        key = lambda z: (z.real, z.imag)
        assert np.allclose(sorted((np.conj(x) for x in a), key=key),
                           sorted(b, key=key), atol=1e-12)


def test_unstable_side_positive_growth():
    p = GLParams(0.6)
    l1, _ = L_symbol_eigs(0.1, 0.0, p)
    assert l1.real > 0


def test_eckhaus_report_values():
    rep = eckhaus_report(GLParams(0.3))
    assert rep["max_real_part"] <= 0.0
    assert rep["eckhaus_stable"]
    expect = (1 - 3 * 0.09) / (1 - 0.09)
    assert rep["d_parallel"] == pytest.approx(expect, rel=0.01)

    rep0 = eckhaus_report(GLParams(0.0))
    assert rep0["d_parallel"] == pytest.approx(1.0, rel=1e-6)

    rep65 = eckhaus_report(GLParams(0.65))
    assert rep65["max_real_part"] > 0.0
    assert not rep65["eckhaus_stable"]


@pytest.mark.parametrize("k", [0.1, 0.3, 0.55])
def test_m_symbol_bounded_sups(k):
    rep = M_symbol_report(GLParams(k))
    assert np.isfinite(rep["sup_M"]) and np.isfinite(rep["sup_inv_M"])
    assert rep["sup_M"] >= 1.0 >= 1.0 / rep["sup_inv_M"]
    assert rep["origin_value"] == pytest.approx(1.0, abs=1e-6)


def test_m_symbol_b_zero_hook_and_far_limit():
    rep = M_symbol_report(GLParams(0.0))  # b = 0: multiplier identically 1
    assert rep["sup_M"] == pytest.approx(1.0, abs=1e-12)
    assert rep["sup_inv_M"] == pytest.approx(1.0, abs=1e-12)
    from glpattern.symbols import _mhat

    # far-field limit is direction dependent: 1/(1 - (b/a) cos^2 theta),
    # equal to 1 on the eta-axis and alpha-scaled along the xi-axis
    p = GLParams(0.3)
    far_eta = _mhat(np.array([0.0]), np.array([900.0]), p)[0]
    assert far_eta == pytest.approx(1.0, abs=1e-5)
    far_diag = _mhat(np.array([700.0]), np.array([700.0]), p)[0]
    assert far_diag == pytest.approx(1.0 / (1.0 - (p.b / p.a) * 0.5), rel=1e-4)


def test_m_symbol_rejects_unstable_k():
    with pytest.raises(ValueError):
        M_symbol_report(GLParams(0.6))


def test_sextuple_requires_compact_support(grid20, params03):
    X, Y = grid20.meshgrid()
    s = np.exp(-(X**2 + Y**2) / 25.0)  # Gaussian tails reach the boundary
    with pytest.raises(ValueError, match="support"):
        TestFieldSextuple.from_smooth_pair(s, np.zeros(grid20.shape), params03, grid20)


def test_cokernel_pairings_vanish(grid20, params03, rng):
    area = (2 * grid20.half_width) ** 2
    for _ in range(20):
        s, phi = random_bump_pair(grid20, rng)
        t = TestFieldSextuple.from_smooth_pair(s, phi, params03, grid20)
        scale = max(np.max(np.abs(f)) for f in (t.f2, t.f3, t.f4, t.f5))
        pair = cokernel_pairing(t, params03, grid20)
        assert np.max(np.abs(pair)) <= 1e-6 * scale * area


def test_cokernel_negative_control(grid20, params03):
    X, Y = grid20.meshgrid()
    zero = np.zeros(grid20.shape)
    gauss = np.exp(-(X**2 + Y**2) / 200.0)  # wide bump: O(1) zeroth moment
    t = TestFieldSextuple(f1=zero, f2=gauss, f3=zero, f4=zero, f5=zero, f6=zero)
    pair = cokernel_pairing(t, params03, grid20)
    scale = 1.0 * (2 * grid20.half_width) ** 2
    assert np.max(np.abs(pair)) > 1e-2 * scale


def test_cokernel_linearity(grid20, params03, rng):
    s1, p1 = random_bump_pair(grid20, rng)
    s2, p2 = random_bump_pair(grid20, rng)
    ta = TestFieldSextuple.from_smooth_pair(s1, p1, params03, grid20)
    tb = TestFieldSextuple.from_smooth_pair(s2, p2, params03, grid20)
    tc = TestFieldSextuple.from_smooth_pair(2 * s1 - s2, 2 * p1 - p2, params03, grid20)
    pa = cokernel_pairing(ta, params03, grid20)
    pb = cokernel_pairing(tb, params03, grid20)
    pc = cokernel_pairing(tc, params03, grid20)
    assert np.allclose(pc, 2 * pa - pb, atol=1e-9)


# --- bordering integral -------------------------------------------------------

def _bordering_grid():
    return Grid2D(40.0, 401)  # h = 0.2


def test_bordering_value_and_equality():
    grid = _bordering_grid()
    for k in (0.1, 0.3, 0.45):
        p = GLParams(k)
        b1, b2 = bordering_integral(p, grid)
        target = -2.0 * np.pi / np.sqrt(p.alpha)
        assert b1 == pytest.approx(target, rel=1e-3)
        assert b2 == pytest.approx(target, rel=1e-3)


def test_bordering_mutual_agreement():
    # the x- and y-moment quadratures agree to 1e-6 once the stencil
    # anisotropy error is resolved
    grid = Grid2D(30.0, 1201)
    for k in (0.1, 0.3, 0.45):
        b1, b2 = bordering_integral(GLParams(k), grid)
        assert abs(b1 - b2) <= 1e-6


def test_bordering_k_zero_hook():
    b1, b2 = bordering_integral(GLParams(0.0), _bordering_grid())
    assert b1 == pytest.approx(-2.0 * np.pi, rel=1e-3)
    assert b2 == pytest.approx(-2.0 * np.pi, rel=1e-3)


def test_bordering_cutoff_independence():
    grid = _bordering_grid()
    p = GLParams(0.3)
    base = bordering_integral(p, grid)[0]
    alt = bordering_integral(p, grid, FarField(r_inner=0.4, r_outer=1.2, degree=13))[0]
    assert abs(alt - base) <= 1e-3 * abs(base)


def test_bordering_rejects_coarse_grid():
    with pytest.raises(ValueError):
        bordering_integral(GLParams(0.3), Grid2D(20.0, 101))
    with pytest.raises(ValueError):
        bordering_integral(GLParams(0.3), Grid2D(40.0, 161))  # h = 0.5
