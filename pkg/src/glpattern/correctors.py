"""Far-field cutoff and log correctors with closed-form derivatives.

The correctors are built from G(x, y) = chi(rho) * ln(alpha x^2 + y^2) with the
scaled radius rho = sqrt(alpha x^2 + y^2):

    P1 = cp1 * dG/dx,   P2 = (1/2) dG/dx,   P3 = (1/2) dG/dy,
    cp1 = (1 - alpha) / (2 b alpha) = -1 / (4 (1 - k^2)),

where chi is a polynomial smoothstep, identically 0 for rho <= r_inner and 1
for rho >= r_outer. Partial derivatives (up to total order 3 for G, order 2
for chi) are generated symbolically once per smoothstep degree and cached as
plain numpy callables, so corrector columns of the Jacobian never pick up
stencil truncation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

__all__ = ["FarField", "smoothstep_coeffs", "eval_farfield"]

_G_ORDER = 3
_CHI_ORDER = 2


def smoothstep_coeffs(degree: int) -> np.ndarray:
    """Coefficients (ascending powers) of the degree-(2m+1) smoothstep on [0, 1].

    The polynomial has value 0/1 and vanishing derivatives up to order m at
    both endpoints; degree 9 gives the C^4 regularity the fourth-order
    corrector derivatives require.
    """
    if degree % 2 == 0 or degree < 9:
        raise ValueError(f"smoothstep degree must be odd and >= 9, got {degree}")
    m = (degree - 1) // 2
    coeffs = np.zeros(degree + 1)
    for j in range(m + 1):
        coeffs[m + 1 + j] = math.comb(m + j, j) * math.comb(2 * m + 1, m - j) * (-1) ** j
    return coeffs


@lru_cache(maxsize=None)
def _tables(degree: int):
    """Lambdified partials of G and chi, per branch, keyed by smoothstep degree."""
    x, y, al, r0, r1 = sp.symbols("x y alpha r0 r1", positive=True)
    rho = sp.sqrt(al * x**2 + y**2)
    t = (rho - r0) / (r1 - r0)
    coeffs = smoothstep_coeffs(degree)
    step = sum(sp.Integer(int(c)) * t**p for p, c in enumerate(coeffs) if c)
    logu = sp.log(al * x**2 + y**2)

    def lam(expr, i, j):
        return sp.lambdify((x, y, al, r0, r1), sp.diff(expr, x, i, y, j), "numpy")

    g_mid, g_far, chi_mid = {}, {}, {}
    for i in range(_G_ORDER + 1):
        for j in range(_G_ORDER + 1 - i):
            g_mid[(i, j)] = lam(step * logu, i, j)
            g_far[(i, j)] = lam(logu, i, j)
            if i + j <= _CHI_ORDER:
                chi_mid[(i, j)] = lam(step, i, j)
    return g_mid, g_far, chi_mid


@dataclass(frozen=True)
class FarField:
    """Cutoff configuration for the log correctors.

    ``r_inner``/``r_outer`` bound the smoothstep transition in the scaled
    radius rho = sqrt(alpha x^2 + y^2); ``degree`` is the smoothstep
    polynomial degree (odd, >= 9 so that chi is at least C^4).
    """

    r_inner: float = 0.5
    r_outer: float = 1.0
    degree: int = 9

    def __post_init__(self):
        if not (0.0 < self.r_inner < self.r_outer):
            raise ValueError(f"need 0 < r_inner < r_outer, got ({self.r_inner}, {self.r_outer})")
        smoothstep_coeffs(self.degree)  # validates the degree

    # -- scalar cutoff profile ------------------------------------------------
    def chi_radial(self, rho, order: int = 0):
        """chi and its radial derivatives d^m chi / d rho^m, m <= 4."""
        if order > 4:
            raise ValueError("radial derivatives implemented up to order 4")
        rho = np.asarray(rho, dtype=float)
        coeffs = smoothstep_coeffs(self.degree)
        width = self.r_outer - self.r_inner
        t = (rho - self.r_inner) / width
        poly = np.polynomial.Polynomial(coeffs).deriv(order)
        out = poly(np.clip(t, 0.0, 1.0)) / width**order
        if order == 0:
            out = np.where(rho <= self.r_inner, 0.0, np.where(rho >= self.r_outer, 1.0, out))
        else:
            out = np.where((rho <= self.r_inner) | (rho >= self.r_outer), 0.0, out)
        return out

    # -- cartesian partials ---------------------------------------------------
    def _branches(self, X, Y, alpha):
        rho = np.sqrt(alpha * X * X + Y * Y)
        mid = (rho > self.r_inner) & (rho < self.r_outer)
        far = rho >= self.r_outer
        return mid, far

    def g_partial(self, i: int, j: int, X, Y, alpha: float) -> np.ndarray:
        """Partial d^i_x d^j_y of G = chi * ln(alpha x^2 + y^2), i + j <= 3."""
        if i + j > _G_ORDER:
            raise ValueError(f"G partials available up to total order {_G_ORDER}")
        g_mid, g_far, _ = _tables(self.degree)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        mid, far = self._branches(X, Y, alpha)
        out = np.zeros(np.broadcast(X, Y).shape)
        if mid.any():
            out[mid] = g_mid[(i, j)](X[mid], Y[mid], alpha, self.r_inner, self.r_outer)
        if far.any():
            out[far] = g_far[(i, j)](X[far], Y[far], alpha, self.r_inner, self.r_outer)
        return out

    def chi_partial(self, i: int, j: int, X, Y, alpha: float) -> np.ndarray:
        """Partial d^i_x d^j_y of chi(rho(x, y)), i + j <= 2."""
        if i + j > _CHI_ORDER:
            raise ValueError(f"chi partials available up to total order {_CHI_ORDER}")
        _, _, chi_mid = _tables(self.degree)
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        mid, far = self._branches(X, Y, alpha)
        out = np.zeros(np.broadcast(X, Y).shape)
        if mid.any():
            out[mid] = chi_mid[(i, j)](X[mid], Y[mid], alpha, self.r_inner, self.r_outer)
        if far.any() and (i, j) == (0, 0):
            out[far] = 1.0
        return out


def eval_farfield(ff: FarField, params, grid) -> dict:
    """Correctors P1, P2, P3 and their partials to order 2 on the grid nodes.

    Keys are ``p1, p1_x, p1_y, p1_xx, p1_xy, p1_yy`` and likewise for p2, p3.
    All fields are finite everywhere (the cutoff removes the log singularity)
    and vanish identically for rho <= r_inner.
    """
    X, Y = grid.meshgrid()
    alpha = params.alpha
    cp1 = params.p1_coeff
    out = {}
    # P1 and P2 are x-derivative based (orders shifted by (1, 0)), P3 by (0, 1).
    for name, scale, (di, dj) in (("p1", cp1, (1, 0)), ("p2", 0.5, (1, 0)), ("p3", 0.5, (0, 1))):
        out[name] = scale * ff.g_partial(di, dj, X, Y, alpha)
        out[f"{name}_x"] = scale * ff.g_partial(di + 1, dj, X, Y, alpha)
        out[f"{name}_y"] = scale * ff.g_partial(di, dj + 1, X, Y, alpha)
        out[f"{name}_xx"] = scale * ff.g_partial(di + 2, dj, X, Y, alpha)
        out[f"{name}_xy"] = scale * ff.g_partial(di + 1, dj + 1, X, Y, alpha)
        out[f"{name}_yy"] = scale * ff.g_partial(di, dj + 2, X, Y, alpha)
    return out
