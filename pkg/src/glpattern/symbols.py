"""Fourier-symbol diagnostics and quadrature checks for the linearization.

The linearization of the amplitude-phase system at the roll has the symbol

    [[-q^2 - 2 tau^2,  -2 k tau i xi],
     [(2 k / tau) i xi,     -q^2   ]],      q^2 = xi^2 + eta^2,

whose soft branch carries the Eckhaus sideband instability. The extended
first-order system (fields s, psi, theta, u, v, w with psi = 2 k tau phi_x
etc.) supplies the cokernel pairings and the bordering integral that make the
truncated bordered Newton system square and solvable.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .correctors import FarField
from .grid import Grid2D, d1_matrix, d2_matrix, derivatives, integrate
from .model import GLParams

__all__ = [
    "ModeGrid",
    "L_symbol_eigs",
    "eckhaus_report",
    "M_symbol_report",
    "TestFieldSextuple",
    "random_bump_pair",
    "cokernel_pairing",
    "bordering_integral",
]


@dataclass(frozen=True)
class ModeGrid:
    """Mode samples: dense linear axis near the origin plus a sparse far part."""

    axis: np.ndarray = field(repr=False)

    @classmethod
    def default(cls, extent: float = 4.0, fine_step: float = 0.005,
                fine_extent: float = 0.25, coarse_step: float = 0.05) -> "ModeGrid":
        fine = np.arange(-fine_extent, fine_extent + fine_step / 2, fine_step)
        coarse = np.arange(-extent, extent + coarse_step / 2, coarse_step)
        axis = np.unique(np.concatenate([fine, coarse, [0.0]]))
        return cls(axis=axis)

    @classmethod
    def far_arm(cls, r_max: float = 1e3, num: int = 400) -> np.ndarray:
        """Logarithmic radial arm used for the far tail of the multiplier sups."""
        return np.geomspace(1e-4, r_max, num)


def _eig_pair(xi, eta, params: GLParams):
    """Closed-form eigenvalues, soft branch first."""
    q2 = xi * xi + eta * eta
    tau2 = params.tau**2
    disc = np.sqrt(tau2 * tau2 + 4.0 * params.k**2 * xi * xi + 0j)
    return -q2 - tau2 + disc, -q2 - tau2 - disc


def L_symbol_eigs(xi: float, eta: float, params: GLParams) -> tuple:
    """Eigenvalue pair of the linearization symbol at mode (xi, eta)."""
    lam1, lam2 = _eig_pair(float(xi), float(eta), params)
    return complex(lam1), complex(lam2)


def symbol_matrix(xi: float, eta: float, params: GLParams) -> np.ndarray:
    q2 = xi * xi + eta * eta
    return np.array(
        [[-q2 - 2.0 * params.tau**2, -2.0 * params.k * params.tau * 1j * xi],
         [(2.0 * params.k / params.tau) * 1j * xi, -q2]], dtype=complex)


def eckhaus_report(params: GLParams, mode_grid: ModeGrid | None = None) -> dict:
    """Max growth rate over the mode grid and the long-wave diffusion coefficient.

    The soft branch behaves like lambda ~ -d_par * xi^2 along eta = 0; the
    quadratic fit over |xi| <= 0.05 reports d_par = (1 - 3 k^2)/(1 - k^2).
    """
    mg = mode_grid or ModeGrid.default()
    XI, ETA = np.meshgrid(mg.axis, mg.axis, indexing="ij")
    lam1, lam2 = _eig_pair(XI, ETA, params)
    max_re = float(np.max(np.maximum(lam1.real, lam2.real)))

    xi_f = np.arange(-0.05, 0.0501, 0.0025)
    xi_f = xi_f[xi_f != 0.0]
    soft = _eig_pair(xi_f, 0.0 * xi_f, params)[0].real
    # least squares for lambda = -d * xi^2 through the origin
    d_par = float(-np.sum(soft * xi_f**2) / np.sum(xi_f**4))
    return {"max_real_part": max_re, "d_parallel": d_par,
            "eckhaus_stable": bool(max_re <= 0.0)}


def _mhat(xi, eta, params: GLParams):
    a, b = params.a, params.b
    q2 = xi * xi + eta * eta
    den = q2 - (b / a) * xi * xi
    return q2 / den - b * xi * xi / ((q2 + a) * den)


def M_symbol_report(params: GLParams, mode_grid: ModeGrid | None = None) -> dict:
    """Boundedness report for the scalar multiplier symbol M.

    Samples |M| and |1/M| over the mode grid plus a logarithmic radial arm to
    r = 1e3, and evaluates the removable-singularity limit at the origin
    numerically (the formula's limit is 1; the b = 0 hook gives M identically
    1, and M -> 1 as q -> infinity).
    """
    if params.k**2 >= 1.0 / 3.0:
        raise ValueError("k^2 >= 1/3: the multiplier denominator vanishes on a cone")
    mg = mode_grid or ModeGrid.default()
    XI, ETA = np.meshgrid(mg.axis, mg.axis, indexing="ij")
    vals = _mhat(XI, ETA, params)
    mask = np.isfinite(vals)  # excludes the 0/0 point at the exact origin
    vals = vals[mask]

    r = ModeGrid.far_arm()
    th = np.linspace(0.0, np.pi, 13)[1:-1]
    R, TH = np.meshgrid(r, th, indexing="ij")
    far = _mhat(R * np.cos(TH), R * np.sin(TH), params).ravel()

    allv = np.concatenate([vals, far])
    origin = float(np.mean(_mhat(1e-7 * np.cos(th), 1e-7 * np.sin(th), params)))
    return {
        "sup_M": float(np.max(np.abs(allv))),
        "sup_inv_M": float(np.max(1.0 / np.abs(allv))),
        "origin_value": origin,
    }


@dataclass(frozen=True)
class TestFieldSextuple:
    """Image under the extended operator of a compactly supported (s, phi) pair.

    The derived fields use the membership relations u = s_xx, v = s_xy,
    w = s_yy, psi = 2 k tau phi_x, theta = 2 k tau phi_y, so the sextuple lies
    in the operator's range by construction and all six cokernel pairings
    vanish up to quadrature error.
    """

    __test__ = False  # not a pytest class despite the name

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray
    f4: np.ndarray
    f5: np.ndarray
    f6: np.ndarray

    @classmethod
    def from_smooth_pair(cls, s: np.ndarray, phi: np.ndarray, params: GLParams,
                         grid: Grid2D, support_margin: float | None = None) -> "TestFieldSextuple":
        margin = 5 * grid.h if support_margin is None else support_margin
        X, Y = grid.meshgrid()
        inside = (np.abs(X) <= grid.half_width - margin) & (np.abs(Y) <= grid.half_width - margin)
        if np.any((np.abs(s) + np.abs(phi))[~inside] != 0.0):
            raise ValueError(f"test pair must be supported >= {margin:g} from the boundary")
        a, b, ktau = params.a, params.b, 2.0 * params.k * params.tau

        ds = derivatives(s, grid)
        dphi = derivatives(phi, grid)
        psi, theta = ktau * dphi["x"], ktau * dphi["y"]
        u, v, w = ds["xx"], ds["xy"], ds["yy"]
        dpsi = derivatives(psi, grid)
        dtheta = derivatives(theta, grid)
        du = derivatives(u, grid)
        dv = derivatives(v, grid)
        dw = derivatives(w, grid)
        return cls(
            f1=ds["lap"] - a * s - psi,
            f2=dpsi["lap"] + b * u,
            f3=dtheta["lap"] + b * v,
            f4=-dpsi["xx"] + du["lap"] - a * u,
            f5=-dtheta["xx"] + dv["lap"] - a * v,
            f6=-dpsi["yy"] + dw["lap"] - a * w,
        )


def _bump(t: np.ndarray) -> np.ndarray:
    """C-infinity bump, supported on |t| < 1, normalized to 1 at t = 0."""
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
    return out


def random_bump_pair(grid: Grid2D, rng: np.random.Generator, margin: float | None = None):
    """Seeded tensor-product bump pair (s, phi) with randomized centers/widths."""
    L = grid.half_width
    margin = 6 * grid.h if margin is None else margin
    X, Y = grid.meshgrid()

    def one():
        wx = rng.uniform(0.2 * L, 0.35 * L)
        wy = rng.uniform(0.2 * L, 0.35 * L)
        cx = rng.uniform(-(L - margin - wx), L - margin - wx)
        cy = rng.uniform(-(L - margin - wy), L - margin - wy)
        amp = rng.uniform(0.5, 2.0) * rng.choice([-1.0, 1.0])
        return amp * _bump((X - cx) / wx) * _bump((Y - cy) / wy)

    return one(), one()


def cokernel_pairing(t: TestFieldSextuple, params: GLParams, grid: Grid2D) -> np.ndarray:
    """The six range-characterizing moments.

    integral (a f2 + b f4) e_j and integral (a f3 + b f5) e_j for
    e in {1, x, y}. The combinations a f2 + b f4 = a lap(psi) - b psi_xx +
    b lap(u) are discrete divergences, so for sextuples built from compactly
    supported pairs every pairing telescopes to zero.
    """
    a, b = params.a, params.b
    X, Y = grid.meshgrid()
    row1 = a * t.f2 + b * t.f4
    row2 = a * t.f3 + b * t.f5
    return np.array([
        integrate(row1, grid), integrate(row1 * X, grid), integrate(row1 * Y, grid),
        integrate(row2, grid), integrate(row2 * X, grid), integrate(row2 * Y, grid),
    ])


def bordering_integral(params: GLParams, grid: Grid2D,
                       farfield: FarField | None = None) -> tuple:
    """Quadratures int [lap(P2) + b P1_xx] x  and  int [lap(P3) + b P1_xy] y.

    The correctors are sampled analytically and differentiated with the module
    stencils; summation by parts then telescopes the cutoff annulus away
    exactly, leaving a discretely consistent boundary functional of the smooth
    far field. Both values equal -2 pi / sqrt(alpha) and are independent of
    the smoothstep degree and transition interval.
    """
    if grid.half_width < 30.0 or grid.h > 0.25:
        raise ValueError(
            f"need L >= 30 and h <= 0.25 to resolve the far tail, got "
            f"L={grid.half_width}, h={grid.h:.4g}"
        )
    ff = farfield or FarField()
    X, Y = grid.meshgrid()
    al, b, cp1 = params.alpha, params.b, params.p1_coeff
    gx = ff.g_partial(1, 0, X, Y, al)
    gy = ff.g_partial(0, 1, X, Y, al)
    p1, p2, p3 = cp1 * gx, 0.5 * gx, 0.5 * gy

    n, h = grid.npts, grid.h
    D1, D2 = d1_matrix(n, h), d2_matrix(n, h)
    lap = lambda F: D2 @ F + F @ D2.T
    i1 = lap(p2) + b * (D2 @ p1)
    i2 = lap(p3) + b * ((D1 @ p1) @ D1.T)
    return float(integrate(i1 * X, grid)), float(integrate(i2 * Y, grid))
