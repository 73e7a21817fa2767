"""Ginzburg-Landau roll-pattern formulas.

Stationary states of ``0 = lap(A) + A - A|A|^2 + eps*g`` near the roll
``A = tau*exp(i k x)`` are represented in amplitude-phase form. A state
carries a localized amplitude correction s, a localized phase correction
phi_loc, the log coefficient c and the far-field phase constant phi_inf; the
total fields are

    s_tot   = s + c * P1
    phi_tot = phi0 + phi_loc + phi_inf * chi + (c / (2 k tau)) * chi * ln(alpha x^2 + y^2)

with the correctors of :mod:`glpattern.correctors`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .correctors import FarField
from .grid import Grid2D, derivatives, integrate

__all__ = [
    "ECKHAUS_K",
    "GLParams",
    "make_params",
    "Inhomogeneity",
    "StateAP",
    "zero_state",
    "total_fields",
    "residual_ap",
    "reconstruct_A",
    "residual_complex",
    "g_hat",
    "c1_of_phi",
    "c1_flux_balance",
    "selected_phase",
    "phase_from_gradient",
]

ECKHAUS_K = 1.0 / np.sqrt(3.0)


@dataclass(frozen=True)
class GLParams:
    """Wavenumber, derived constants, forcing amplitude and base phase.

    The bare constructor computes derived constants without range checks (the
    symbol diagnostics need parameters on the unstable side and at k = 0);
    :func:`make_params` is the validated entry point for everything else.
    """

    k: float
    eps: float = 0.0
    phi0: float = 0.0

    @property
    def tau(self) -> float:
        return float(np.sqrt(1.0 - self.k**2))

    @property
    def a(self) -> float:
        return 2.0 * (1.0 - self.k**2)

    @property
    def b(self) -> float:
        return 4.0 * self.k**2

    @property
    def alpha(self) -> float:
        return (1.0 - self.k**2) / (1.0 - 3.0 * self.k**2)

    @property
    def p1_coeff(self) -> float:
        # (1 - alpha) / (2 b alpha) in a form that stays finite as k -> 0
        return -1.0 / (4.0 * (1.0 - self.k**2))


def make_params(k: float, eps: float = 0.0, phi0: float = 0.0,
                k_min: float = 1e-3, margin: float = 1e-2) -> GLParams:
    """Validated parameters: k_min <= |k| <= 1/sqrt(3) - margin."""
    if abs(k) >= ECKHAUS_K - margin:
        raise ValueError(
            f"|k|={abs(k):.6g} violates the Eckhaus bound 1/sqrt(3)-{margin:g}~"
            f"{ECKHAUS_K - margin:.6g}; rolls are sideband-unstable there"
        )
    if abs(k) < k_min:
        raise ValueError(
            f"|k|={abs(k):.6g} below k_min={k_min:g}: the 1/(2 k tau) phase "
            "normalization degenerates at k = 0"
        )
    return GLParams(k=float(k), eps=float(eps), phi0=float(phi0))


@dataclass(frozen=True)
class Inhomogeneity:
    """Localized forcing g(x, y).

    Gaussian kinds have the closed-form transform
    ``Ghat(k) = amplitude * 2 pi sigma^2 * exp(-k^2 sigma^2 / 2) * exp(-i k x0)``
    used as an oracle for the quadrature moments. ``tabulated`` carries node
    values and has no closed form.
    """

    kind: str = "gaussian"
    amplitude: complex = 1.0
    center: tuple = (0.0, 0.0)
    sigma: float = 1.0
    table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in ("gaussian", "shifted_gaussian", "complex_gaussian", "tabulated"):
            raise ValueError(f"unknown inhomogeneity kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.kind == "tabulated":
            if self.table is None:
                raise ValueError("tabulated inhomogeneity needs node values")
            if not np.all(np.isfinite(self.table)):
                raise ValueError("tabulated values must be finite")

    def sample(self, grid: Grid2D) -> np.ndarray:
        if self.kind == "tabulated":
            t = np.asarray(self.table)
            if t.shape != grid.shape:
                raise ValueError(f"table shape {t.shape} does not match grid {grid.shape}")
            return t.astype(complex)
        X, Y = grid.meshgrid()
        x0, y0 = self.center
        bump = np.exp(-((X - x0) ** 2 + (Y - y0) ** 2) / (2.0 * self.sigma**2))
        return complex(self.amplitude) * bump

    def transform(self, k: float) -> complex | None:
        """Closed-form Ghat(k) where available, else None."""
        if self.kind == "tabulated":
            return None
        x0 = self.center[0]
        return (complex(self.amplitude) * 2.0 * np.pi * self.sigma**2
                * np.exp(-(k * self.sigma) ** 2 / 2.0) * np.exp(-1j * k * x0))


@dataclass
class StateAP:
    """Amplitude-phase unknowns: localized fields plus the two far-field scalars."""

    s: np.ndarray
    phi_loc: np.ndarray
    c: float = 0.0
    phi_inf: float = 0.0
    farfield: FarField = field(default_factory=FarField)

    def copy(self) -> "StateAP":
        return replace(self, s=self.s.copy(), phi_loc=self.phi_loc.copy())


def zero_state(grid: Grid2D, farfield: FarField | None = None) -> StateAP:
    z = np.zeros(grid.shape)
    return StateAP(s=z.copy(), phi_loc=z.copy(), c=0.0, phi_inf=0.0,
                   farfield=farfield or FarField())


def total_fields(state: StateAP, params: GLParams, grid: Grid2D) -> dict:
    """Total amplitude/phase corrections and their first/second derivatives.

    Stencil derivatives for the localized fields, closed-form derivatives for
    the corrector and cutoff parts.
    """
    X, Y = grid.meshgrid()
    ff, al = state.farfield, params.alpha
    c, k, tau = state.c, params.k, params.tau
    cp1 = params.p1_coeff
    cphase = c / (2.0 * k * tau)

    ds = derivatives(state.s, grid)
    dp = derivatives(state.phi_loc, grid)
    g = {ij: ff.g_partial(*ij, X, Y, al) for ij in
         ((0, 0), (1, 0), (0, 1), (1, 1), (2, 0), (0, 2), (3, 0), (1, 2))}
    ch = {ij: ff.chi_partial(*ij, X, Y, al) for ij in
          ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2))}

    return {
        "s": state.s + c * cp1 * g[(1, 0)],
        "s_x": ds["x"] + c * cp1 * g[(2, 0)],
        "s_y": ds["y"] + c * cp1 * g[(1, 1)],
        "s_lap": ds["lap"] + c * cp1 * (g[(3, 0)] + g[(1, 2)]),
        "phi": params.phi0 + state.phi_loc + state.phi_inf * ch[(0, 0)] + cphase * g[(0, 0)],
        "phi_x": dp["x"] + state.phi_inf * ch[(1, 0)] + cphase * g[(1, 0)],
        "phi_y": dp["y"] + state.phi_inf * ch[(0, 1)] + cphase * g[(0, 1)],
        "phi_lap": dp["lap"] + state.phi_inf * (ch[(2, 0)] + ch[(0, 2)])
                   + cphase * (g[(2, 0)] + g[(0, 2)]),
    }


def residual_ap(state: StateAP, params: GLParams, g: Inhomogeneity, grid: Grid2D) -> tuple:
    """Amplitude and phase residuals of the stationary system at ``state``.

    Requires the total amplitude to stay perturbative: min(s_tot + tau) >
    0.1 tau, else the polar form is outside its validity region.
    """
    tf = total_fields(state, params, grid)
    k, tau, eps = params.k, params.tau, params.eps
    E = tf["s"] + tau
    if np.min(E) <= 0.1 * tau:
        raise ValueError(
            f"amplitude too close to zero: min(s_tot + tau) = {np.min(E):.3g} <= 0.1*tau"
        )
    X, Y = grid.meshgrid()
    ghat = g.sample(grid) * np.exp(-1j * (k * X + tf["phi"]))
    grad2 = k * k + 2.0 * k * tf["phi_x"] + tf["phi_x"] ** 2 + tf["phi_y"] ** 2
    r_amp = tf["s_lap"] + E - E * grad2 - E**3 + eps * ghat.real
    num = 2.0 * k * tf["s_x"] + 2.0 * (tf["s_x"] * tf["phi_x"] + tf["s_y"] * tf["phi_y"]) \
        + eps * ghat.imag
    r_phase = tf["phi_lap"] + num / E
    return r_amp, r_phase


def reconstruct_A(state: StateAP, params: GLParams, grid: Grid2D) -> np.ndarray:
    """Complex field A = (tau + s_tot) * exp(i (k x + phi_tot))."""
    tf = total_fields(state, params, grid)
    X, _ = grid.meshgrid()
    return (params.tau + tf["s"]) * np.exp(1j * (params.k * X + tf["phi"]))


def residual_complex(A: np.ndarray, params: GLParams, g: Inhomogeneity, grid: Grid2D) -> np.ndarray:
    """lap(A) + A - A|A|^2 + eps*g, nodewise with the module stencils."""
    A = np.asarray(A)
    if not np.all(np.isfinite(A)):
        raise ValueError("field contains non-finite entries")
    lap = derivatives(A.real, grid)["lap"] + 1j * derivatives(A.imag, grid)["lap"]
    return lap + A - A * np.abs(A) ** 2 + params.eps * g.sample(grid)


def g_hat(g: Inhomogeneity, k: float, grid: Grid2D) -> complex:
    """Moment Ghat(k) = integral of g(x, y) exp(-i k x) by quadrature."""
    X, _ = grid.meshgrid()
    return complex(integrate(g.sample(grid) * np.exp(-1j * k * X), grid))


def c1_of_phi(g: Inhomogeneity, params: GLParams, grid: Grid2D, phi: float) -> float:
    """kappa * Im integral[g exp(-i(kx + phi))], kappa = sqrt(1-3k^2)/(pi(1-k^2)).

    Cross-checked internally against the transform identity
    kappa * Im[Ghat(k) exp(-i phi)] to 1e-8.
    """
    k = params.k
    kappa = np.sqrt(1.0 - 3.0 * k * k) / (np.pi * (1.0 - k * k))
    X, _ = grid.meshgrid()
    val = kappa * integrate(np.imag(g.sample(grid) * np.exp(-1j * (k * X + phi))), grid)
    ident = kappa * np.imag(g_hat(g, k, grid) * np.exp(-1j * phi))
    scale = max(1.0, abs(ident))
    if abs(val - ident) > 1e-8 * scale:
        raise AssertionError(f"c1 quadrature/transform identity violated: {val} vs {ident}")
    return float(val)


def c1_flux_balance(g: Inhomogeneity, params: GLParams, grid: Grid2D, phi: float) -> float:
    """Leading-order log coefficient from the far-field flux balance.

    With the phase normalized as (c/(2 k tau)) ln(alpha x^2 + y^2), the
    linearized system's exact infinite-domain balance (amplitude-phase
    coupling feedback included) gives

        c1* = -(k sqrt(alpha) / (2 pi)) * Im[Ghat(k) exp(-i phi)].

    This differs from :func:`c1_of_phi` by the constant factor
    -k tau alpha / 2; the solver and the far-field fits reproduce this value
    (see the test suite for the quadrature and solve cross-checks).
    """
    k = params.k
    return float(-(k * np.sqrt(params.alpha) / (2.0 * np.pi))
                 * np.imag(g_hat(g, k, grid) * np.exp(-1j * phi)))


def selected_phase(g: Inhomogeneity, params: GLParams, grid: Grid2D) -> dict:
    """Zeros of c1 and the slopes there.

    Returns ``phi1 = arg Ghat (mod 2 pi)``, ``phi2 = phi1 + pi`` and the
    derivatives c1'(phi_j) = -/+ kappa |Ghat|. Degenerate (|Ghat| ~ 0)
    inhomogeneities select no phase at leading order.
    """
    k = params.k
    gh = g_hat(g, k, grid)
    if abs(gh) <= 1e-12:
        raise ValueError("degenerate inhomogeneity: no leading-order phase selection")
    kappa = np.sqrt(1.0 - 3.0 * k * k) / (np.pi * (1.0 - k * k))
    phi1 = float(np.angle(gh) % (2.0 * np.pi))
    phi2 = float((phi1 + np.pi) % (2.0 * np.pi))
    for p in (phi1, phi2):
        if abs(c1_of_phi(g, params, grid, p)) > 1e-10 * max(1.0, kappa * abs(gh)):
            raise AssertionError("c1 does not vanish at the computed selected phase")
    return {
        "phi1": phi1,
        "phi2": phi2,
        "slope1": float(-kappa * abs(gh)),
        "slope2": float(kappa * abs(gh)),
        "ghat": gh,
    }


def phase_from_gradient(psi: np.ndarray, theta: np.ndarray, params: GLParams,
                        grid: Grid2D, phi0: float, nt: int | None = None) -> np.ndarray:
    """Radial line-integral phase reconstruction.

    phi_bd(x, y) = phi0 + (1/(2 k tau)) * int_0^1 [psi(t x, t y) x + theta(t x, t y) y] dt,
    evaluated per node with composite Simpson in t and bilinear interpolation
    of psi, theta along the ray. Linear in (psi, theta).
    """
    n, h = grid.npts, grid.h
    X, Y = grid.meshgrid()
    if nt is None:
        nt = 2 * n + 1
    if nt % 2 == 0:
        nt += 1
    ts = np.linspace(0.0, 1.0, nt)
    w = np.ones(nt)
    w[1:-1:2], w[2:-1:2] = 4.0, 2.0
    w *= (ts[1] - ts[0]) / 3.0

    acc = np.zeros(grid.shape)
    for t, wt in zip(ts, w):
        # fractional indices of (t x, t y) in the node lattice
        ix = (t * X + grid.half_width) / h
        iy = (t * Y + grid.half_width) / h
        pv = ndimage.map_coordinates(psi, [ix, iy], order=1, mode="nearest")
        tv = ndimage.map_coordinates(theta, [ix, iy], order=1, mode="nearest")
        acc += wt * (pv * X + tv * Y)
    return phi0 + acc / (2.0 * params.k * params.tau)
