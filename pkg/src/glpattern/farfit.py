"""Far-field extraction: phase unwrapping and the log/constant regression.

The computed patterns have total phase Phi ~ k x + phi0 + Phi_inf +
(c / (2 k tau)) ln(alpha x^2 + y^2) far from the inhomogeneity; fitting the
unwrapped phase against {ln(alpha x^2+y^2)/(2 k tau), 1} over an annulus
recovers (c, Phi_inf), and the mean modulus recovers the amplitude limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .grid import AnnulusMask, Grid2D
from .model import GLParams, Inhomogeneity

__all__ = ["FitResult", "unwrap_phase", "fit_far_field", "selection_scan", "default_annulus"]


@dataclass(frozen=True)
class FitResult:
    c_fit: float
    phi_inf_fit: float
    s_inf_fit: float
    residual_rms: float
    annulus: AnnulusMask
    n_nodes: int


def default_annulus(grid: Grid2D) -> AnnulusMask:
    """Fit annulus [0.55 L, 0.8 L]: outside the localized corrections, inside
    the region polluted by the boundary closure."""
    return AnnulusMask.from_radii(grid, 0.55 * grid.half_width, 0.8 * grid.half_width)


def unwrap_phase(A: np.ndarray, params: GLParams, grid: Grid2D,
                 nt: int | None = None, amp_floor: float | None = None):
    """Phase of A, continuous along rays from the origin, minus k x.

    Marches outward along the ray to every node, correcting 2 pi jumps of the
    interpolated argument; the origin value is taken in (-pi, pi]. Returns
    ``(phase_minus_kx, valid)`` where ``valid`` flags nodes with |A| above the
    amplitude floor (default 0.1 tau); phase values at masked nodes are still
    returned but undefined in the contract sense.
    """
    A = np.asarray(A, dtype=complex)
    if A.shape != grid.shape:
        raise ValueError(f"field has shape {A.shape}, expected {grid.shape}")
    n, h, L = grid.npts, grid.h, grid.half_width
    floor = 0.1 * params.tau if amp_floor is None else amp_floor
    valid = np.abs(A) >= floor

    if nt is None:
        nt = 2 * n
    ts = np.linspace(0.0, 1.0, nt)
    X, Y = grid.meshgrid()
    out = np.empty(grid.shape)

    block = max(1, int(2e6 / (nt * n)))
    for i0 in range(0, n, block):
        i1 = min(n, i0 + block)
        xb, yb = X[i0:i1], Y[i0:i1]
        ix = (ts[:, None, None] * xb[None] + L) / h
        iy = (ts[:, None, None] * yb[None] + L) / h
        re = ndimage.map_coordinates(A.real, [ix, iy], order=1, mode="nearest")
        im = ndimage.map_coordinates(A.imag, [ix, iy], order=1, mode="nearest")
        theta = np.unwrap(np.arctan2(im, re), axis=0)
        out[i0:i1] = theta[-1]
    return out - params.k * X, valid


def fit_far_field(A: np.ndarray, params: GLParams, grid: Grid2D,
                  annulus: AnnulusMask | None = None, min_nodes: int = 50,
                  chi_outer: float = 1.0) -> FitResult:
    """Least-squares (c, Phi_inf) from the unwrapped far-field phase.

    The annulus must lie where the cutoff is identically 1 (scaled radius
    rho >= chi_outer). Fewer than ``min_nodes`` usable nodes is an error.
    """
    if params.k**2 >= 1.0 / 3.0:
        raise ValueError("far-field fit requires k^2 < 1/3 (alpha > 0)")
    ann = annulus or default_annulus(grid)
    X, Y = grid.meshgrid()
    alpha = params.alpha
    rho_min = np.min(np.sqrt(alpha * X.ravel()[ann.members] ** 2 + Y.ravel()[ann.members] ** 2))
    if rho_min < chi_outer:
        raise ValueError(
            f"annulus reaches scaled radius {rho_min:.3g} < {chi_outer:g}, inside the cutoff"
        )
    phase, valid = unwrap_phase(A, params, grid)
    sel = ann.members[valid.ravel()[ann.members]]
    if sel.size < min_nodes:
        raise ValueError(f"only {sel.size} usable annulus nodes, need >= {min_nodes}")

    xf, yf = X.ravel()[sel], Y.ravel()[sel]
    basis = np.column_stack([
        np.log(alpha * xf**2 + yf**2) / (2.0 * params.k * params.tau),
        np.ones(sel.size),
    ])
    target = phase.ravel()[sel] - params.phi0
    coef, *_ = np.linalg.lstsq(basis, target, rcond=None)
    resid = basis @ coef - target
    return FitResult(
        c_fit=float(coef[0]),
        phi_inf_fit=float(coef[1]),
        s_inf_fit=float(np.mean(np.abs(A).ravel()[sel])),
        residual_rms=float(np.sqrt(np.mean(resid**2))),
        annulus=ann,
        n_nodes=int(sel.size),
    )


def selection_scan(g: Inhomogeneity, params: GLParams, grid: Grid2D,
                   phi_list, eps: float, cfg=None, farfield=None,
                   annulus: AnnulusMask | None = None) -> dict:
    """c_fit as a function of the far-field phase offset, with root bracketing.

    Solves the stationary problem at each phi in ``phi_list`` (zero initial
    state), fits the far field, and interpolates sign changes of c_fit(phi) to
    locate the selected phase. Failed solves are flagged, not fatal.
    """
    from .solvers import NewtonConfig, solve_stationary, default_solver_farfield

    cfg = cfg or NewtonConfig()
    ff = farfield or default_solver_farfield(grid)
    rows = []
    for phi in phi_list:
        p = GLParams(k=params.k, eps=eps, phi0=float(phi))
        try:
            state, report = solve_stationary(p, g, grid, cfg=cfg, farfield=ff)
            if not report.success:
                rows.append({"phi": float(phi), "converged": False})
                continue
            from .model import reconstruct_A

            fit = fit_far_field(reconstruct_A(state, p, grid), p, grid, annulus,
                                chi_outer=ff.r_outer)
            rows.append({
                "phi": float(phi), "converged": True, "c_fit": fit.c_fit,
                "phi_inf_fit": fit.phi_inf_fit, "s_inf_fit": fit.s_inf_fit,
                "residual": fit.residual_rms, "c": state.c,
            })
        except Exception as exc:  # solver failure at one phi only flags the row
            rows.append({"phi": float(phi), "converged": False, "error": str(exc)})

    roots = []
    ok = [r for r in rows if r.get("converged")]
    for r0, r1 in zip(ok[:-1], ok[1:]):
        c0, c1v = r0["c_fit"], r1["c_fit"]
        if c0 == 0.0:
            roots.append(r0["phi"])
        elif c0 * c1v < 0.0:
            roots.append(r0["phi"] - c0 * (r1["phi"] - r0["phi"]) / (c1v - c0))
    return {"rows": rows, "roots": roots}
