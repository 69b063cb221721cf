"""B-spline bases on [0, 1] with Gram and roughness penalty matrices.

A basis of size G and degree d uses a clamped knot vector: d + 1 copies of
each endpoint and G - d - 1 uniform interior knots.  Basis values and
second derivatives are tabulated on an evaluation grid once at build time;
the Gram matrix J = integral b b' and roughness matrix Q = integral b'' b''
are trapezoid sums on that grid, so they are exactly consistent with every
other quadrature in the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline

from .errors import UsageError
from .grids import Grid

DEFAULT_BASIS_SIZE = 15
DEFAULT_DEGREE = 3


@dataclass(frozen=True)
class SplineBasis:
    """B-spline basis tabulated on a grid."""

    grid: Grid
    size: int
    degree: int
    knots: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)      # (G, T)
    d2_values: np.ndarray = field(repr=False)   # (G, T), zeros when degree < 2

    def evaluate(self, points) -> np.ndarray:
        """Basis values at arbitrary points in [0, 1], shape (G, len(points))."""
        return _eval_basis(self.knots, self.size, self.degree, np.asarray(points, float))

    def evaluate_d2(self, points) -> np.ndarray:
        """Second derivatives at arbitrary points, shape (G, len(points))."""
        pts = np.asarray(points, dtype=float)
        if self.degree < 2:
            return np.zeros((self.size, pts.size))
        spl = BSpline(self.knots, np.eye(self.size), self.degree).derivative(2)
        return spl(pts).T


def make_basis(grid: Grid, size: int = DEFAULT_BASIS_SIZE,
               degree: int = DEFAULT_DEGREE) -> SplineBasis:
    """Build a clamped B-spline basis evaluated on the grid."""
    size = int(size)
    degree = int(degree)
    if degree < 0:
        raise UsageError("spline degree must be non-negative")
    if size < degree + 1:
        raise UsageError(
            f"basis size {size} too small for degree {degree}; need at least {degree + 1}"
        )
    n_interior = size - degree - 1
    interior = np.linspace(0.0, 1.0, n_interior + 2)[1:-1]
    knots = np.concatenate([np.zeros(degree + 1), interior, np.ones(degree + 1)])
    values = _eval_basis(knots, size, degree, grid.points)
    if degree >= 2:
        d2 = BSpline(knots, np.eye(size), degree).derivative(2)(grid.points).T
    else:
        d2 = np.zeros((size, grid.size))
    return SplineBasis(grid=grid, size=size, degree=degree, knots=knots,
                       values=values, d2_values=d2)


def _eval_basis(knots: np.ndarray, size: int, degree: int, pts: np.ndarray) -> np.ndarray:
    if pts.ndim != 1:
        raise UsageError("evaluation points must be one-dimensional")
    if pts.size and (pts.min() < 0 or pts.max() > 1):
        raise UsageError("evaluation points must lie in [0, 1]")
    out = BSpline(knots, np.eye(size), degree)(pts).T
    # clamped basis: the last function owns the right endpoint
    at_end = pts == knots[-1]
    if np.any(at_end):
        col = np.zeros(size)
        col[-1] = 1.0
        out[:, at_end] = col[:, None]
    return out


def penalty_matrices(basis: SplineBasis) -> tuple[np.ndarray, np.ndarray]:
    """Gram matrix J and roughness matrix Q under the basis's grid quadrature.

    Q is identically zero for bases of degree < 2 (their second derivative
    vanishes almost everywhere).
    """
    w = basis.grid.weights
    J = (basis.values * w) @ basis.values.T
    Q = (basis.d2_values * w) @ basis.d2_values.T
    return (J + J.T) / 2.0, (Q + Q.T) / 2.0
