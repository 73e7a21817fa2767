"""Uniform truncated-plane grids, derivative stencils, quadrature, and weighted norms.

Fields are plain numpy arrays of shape (n, n), indexed ``f[i, j] = f(x_i, y_j)``
with both axes running from -L to L. All reductions use numpy's fixed-order
(pairwise) summation, so repeated evaluations are bitwise reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sps

__all__ = [
    "Grid2D",
    "AnnulusMask",
    "WeightSpec",
    "d1_matrix",
    "d2_matrix",
    "derivatives",
    "integrate",
    "weighted_norm",
    "decay_ratio",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform (2L)x(2L) grid with an odd number of points per side.

    Parameters
    ----------
    half_width : float
        Domain half-width L; nodes span [-L, L] in both directions.
    npts : int
        Points per side. Must be odd (so the origin is a node) and >= 17.
    """

    half_width: float
    npts: int

    def __post_init__(self):
        if self.npts < 17 or self.npts % 2 == 0:
            raise ValueError(f"npts must be odd and >= 17, got {self.npts}")
        if self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.npts - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.npts)

    def meshgrid(self):
        x = self.axis
        return np.meshgrid(x, x, indexing="ij")

    @property
    def shape(self):
        return (self.npts, self.npts)

    def radius(self) -> np.ndarray:
        X, Y = self.meshgrid()
        return np.hypot(X, Y)

    def weight(self) -> np.ndarray:
        """<x> = sqrt(1 + x^2 + y^2) on the nodes."""
        X, Y = self.meshgrid()
        return np.sqrt(1.0 + X * X + Y * Y)

    def interior_mask(self) -> np.ndarray:
        m = np.zeros(self.shape, dtype=bool)
        m[1:-1, 1:-1] = True
        return m

    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask()

    def trapezoid_weights(self) -> np.ndarray:
        w = np.ones(self.npts)
        w[0] = w[-1] = 0.5
        return np.outer(w, w) * self.h * self.h

    def origin_index(self):
        m = (self.npts - 1) // 2
        return (m, m)


@dataclass(frozen=True)
class AnnulusMask:
    """Nodes with r_inner <= |x| <= r_outer, used for far-field sampling."""

    r_inner: float
    r_outer: float
    members: np.ndarray = field(repr=False)  # flat indices into the (n, n) field

    @classmethod
    def from_radii(cls, grid: Grid2D, r_inner: float, r_outer: float) -> "AnnulusMask":
        if not (0.0 < r_inner < r_outer <= grid.half_width):
            raise ValueError(
                f"need 0 < r_inner < r_outer <= L, got ({r_inner}, {r_outer}) with L={grid.half_width}"
            )
        r = grid.radius().ravel()
        members = np.flatnonzero((r >= r_inner) & (r <= r_outer))
        if members.size == 0:
            raise ValueError("annulus contains no grid nodes")
        return cls(r_inner, r_outer, members)

    def mask(self, grid: Grid2D) -> np.ndarray:
        m = np.zeros(grid.npts * grid.npts, dtype=bool)
        m[self.members] = True
        return m.reshape(grid.shape)


@dataclass(frozen=True)
class WeightSpec:
    """Weighted-norm specification.

    ``sobolev`` sums ||<x>^gamma D^a f||_p over |a| <= s; ``kondratiev`` raises
    the weight exponent with the derivative order, ||<x>^(gamma+|a|) D^a f||_p.
    Only p = 2 is supported.
    """

    gamma: float
    s: int = 0
    p: int = 2
    kind: str = "sobolev"

    def __post_init__(self):
        if self.s not in (0, 1, 2):
            raise ValueError(f"derivative order s must be 0, 1 or 2, got {self.s}")
        if self.p != 2:
            raise ValueError("only p = 2 is supported")
        if self.kind not in ("sobolev", "kondratiev"):
            raise ValueError(f"unknown norm kind {self.kind!r}")


@lru_cache(maxsize=64)
def d1_matrix(n: int, h: float) -> sps.csr_matrix:
    """Second-order first-derivative matrix: central interior, one-sided ends."""
    c = 0.5 / h
    D = sps.diags([-c, c], offsets=[-1, 1], shape=(n, n), format="lil")
    D[0, 0], D[0, 1], D[0, 2] = -3 * c, 4 * c, -c
    D[-1, -1], D[-1, -2], D[-1, -3] = 3 * c, -4 * c, c
    return D.tocsr()


@lru_cache(maxsize=64)
def d2_matrix(n: int, h: float) -> sps.csr_matrix:
    """Second-order second-derivative matrix: central interior, one-sided ends."""
    c = 1.0 / (h * h)
    D = sps.diags([c, -2 * c, c], offsets=[-1, 0, 1], shape=(n, n), format="lil")
    D[0, 0], D[0, 1], D[0, 2], D[0, 3] = 2 * c, -5 * c, 4 * c, -c
    D[-1, -1], D[-1, -2], D[-1, -3], D[-1, -4] = 2 * c, -5 * c, 4 * c, -c
    return D.tocsr()


def _check_finite(f: np.ndarray, grid: Grid2D, name: str = "field"):
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ValueError(f"{name} has shape {f.shape}, expected {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError(f"{name} contains non-finite entries")
    return f


def derivatives(f: np.ndarray, grid: Grid2D) -> dict:
    """First and second partial derivatives of ``f`` by finite differences.

    Returns a dict with keys ``x, y, xx, xy, yy, lap``. Interior nodes use
    second-order central stencils; boundary nodes use second-order one-sided
    closures. ``lap`` is exactly ``xx + yy``.
    """
    f = _check_finite(f, grid)
    n, h = grid.npts, grid.h
    D1, D2 = d1_matrix(n, h), d2_matrix(n, h)
    fx = D1 @ f
    fy = f @ D1.T
    fxx = D2 @ f
    fyy = f @ D2.T
    fxy = (D1 @ f) @ D1.T
    return {"x": fx, "y": fy, "xx": fxx, "xy": fxy, "yy": fyy, "lap": fxx + fyy}


def integrate(f: np.ndarray, grid: Grid2D) -> float:
    """Trapezoidal quadrature of ``f`` over the truncated plane."""
    f = np.asarray(f)
    if f.shape != grid.shape:
        raise ValueError(f"field has shape {f.shape}, expected {grid.shape}")
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite entries")
    total = np.sum(f * grid.trapezoid_weights())
    return complex(total) if np.iscomplexobj(f) else float(total)


def _l2(f: np.ndarray, grid: Grid2D) -> float:
    return float(np.sqrt(integrate(np.abs(f) ** 2, grid)))


def weighted_norm(f: np.ndarray, grid: Grid2D, w: WeightSpec) -> float:
    """Weighted Sobolev or Kondratiev norm of ``f`` (p = 2).

    sobolev:    sum_{|a| <= s} || <x>^gamma D^a f ||_2
    kondratiev: sum_{|a| <= s} || <x>^(gamma+|a|) D^a f ||_2
    """
    f = _check_finite(f, grid)
    wgt = grid.weight()
    kond = w.kind == "kondratiev"

    def w_pow(order):
        e = w.gamma + order if kond else w.gamma
        return wgt**e

    total = _l2(w_pow(0) * f, grid)
    if w.s >= 1:
        d = derivatives(f, grid)
        for key in ("x", "y"):
            total += _l2(w_pow(1) * d[key], grid)
        if w.s == 2:
            for key in ("xx", "xy", "yy"):
                total += _l2(w_pow(2) * d[key], grid)
    return total


def decay_ratio(f: np.ndarray, grid: Grid2D, gamma: float, annulus: AnnulusMask) -> float:
    """Sup over the annulus of |f| <x>^(gamma+1), normalized by ||f||_{M^{2,2}_gamma}.

    Bounded ratios across nested annuli indicate the algebraic decay rate
    <x>^(-gamma-1) expected of fields with finite Kondratiev norm. Returns 0
    for the zero field.
    """
    f = _check_finite(f, grid)
    norm = weighted_norm(f, grid, WeightSpec(gamma=gamma, s=2, kind="kondratiev"))
    if norm == 0.0:
        return 0.0
    wgt = grid.weight().ravel()[annulus.members]
    vals = np.abs(f.ravel()[annulus.members]) * wgt ** (gamma + 1.0)
    return float(np.max(vals) / norm)
