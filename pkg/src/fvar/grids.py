"""Function-space primitives on a shared evaluation grid.

Curves are real functions on [0, 1] stored by their values on a common
grid; all integrals are trapezoidal sums with the grid's weights.  A panel
of curves is an (n, p, T) array: n time points, p variables, T grid points.
Bivariate kernels K(u, v) are (T, T) arrays with rows indexed by u and
columns by v; a block kernel collects p_rows x p_cols of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DimensionError, UsageError

DEFAULT_GRID_SIZE = 50


@dataclass(frozen=True)
class Grid:
    """Strictly increasing evaluation points in [0, 1] with trapezoid weights."""

    points: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise UsageError("grid needs at least two points")
        if np.any(np.diff(pts) <= 0):
            raise UsageError("grid points must be strictly increasing")
        if pts[0] < -1e-12 or pts[-1] > 1 + 1e-12:
            raise UsageError("grid points must lie in [0, 1]")
        object.__setattr__(self, "points", pts)
        if self.weights is None:
            object.__setattr__(self, "weights", trapezoid_weights(pts))
        else:
            w = np.asarray(self.weights, dtype=float)
            if w.shape != pts.shape:
                raise DimensionError("weights and points must have equal length")
            object.__setattr__(self, "weights", w)

    @property
    def size(self) -> int:
        return self.points.size

    @classmethod
    def uniform(cls, size: int = DEFAULT_GRID_SIZE) -> "Grid":
        return cls(np.linspace(0.0, 1.0, int(size)))

    def matches(self, other: "Grid") -> bool:
        return self.size == other.size and np.array_equal(self.points, other.points)

    def require_match(self, other: "Grid") -> None:
        if not self.matches(other):
            raise DimensionError("grids do not match")


def trapezoid_weights(points: np.ndarray) -> np.ndarray:
    """Composite trapezoid weights for the given points."""
    pts = np.asarray(points, dtype=float)
    gaps = np.diff(pts)
    w = np.zeros_like(pts)
    w[:-1] += gaps / 2.0
    w[1:] += gaps / 2.0
    return w


def _as_curve(f, grid: Grid) -> np.ndarray:
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 1 or arr.size != grid.size:
        raise DimensionError(
            f"curve has {arr.size if arr.ndim == 1 else arr.shape} values, "
            f"grid has {grid.size} points"
        )
    return arr


def inner_product(f, g, grid: Grid) -> float:
    """Quadrature inner product <f, g> = integral of f*g over [0, 1]."""
    fa = _as_curve(f, grid)
    ga = _as_curve(g, grid)
    return float(np.sum(grid.weights * fa * ga))


def curve_norm(f, grid: Grid) -> float:
    """L2 norm of a single curve under the grid quadrature."""
    return float(np.sqrt(max(inner_product(f, f, grid), 0.0)))


def _as_kernel(K, grid: Grid) -> np.ndarray:
    arr = np.asarray(K, dtype=float)
    if arr.shape != (grid.size, grid.size):
        raise DimensionError(
            f"kernel shape {arr.shape} does not match grid size {grid.size}"
        )
    return arr


def kernel_apply(K, f, grid: Grid) -> np.ndarray:
    """Apply the integral operator with kernel K to a curve f.

    Returns the curve u -> integral K(u, v) f(v) dv evaluated on the grid.
    """
    Ka = _as_kernel(K, grid)
    fa = _as_curve(f, grid)
    return Ka @ (grid.weights * fa)


def hs_norm(K, grid: Grid) -> float:
    """Hilbert-Schmidt norm: sqrt of the double integral of K(u, v)^2."""
    Ka = _as_kernel(K, grid)
    val = grid.weights @ (Ka * Ka) @ grid.weights
    return float(np.sqrt(max(val, 0.0)))


@dataclass(frozen=True)
class BlockKernel:
    """A (p_rows x p_cols) matrix of bivariate kernels on a shared grid."""

    blocks: np.ndarray  # (p_rows, p_cols, T, T)
    grid: Grid

    def __post_init__(self):
        arr = np.asarray(self.blocks, dtype=float)
        if arr.ndim != 4:
            raise DimensionError("blocks must be a 4-d array (p_rows, p_cols, T, T)")
        T = self.grid.size
        if arr.shape[2] != T or arr.shape[3] != T:
            raise DimensionError(
                f"kernel blocks are {arr.shape[2]}x{arr.shape[3]}, grid has {T} points"
            )
        object.__setattr__(self, "blocks", arr)

    @property
    def shape(self) -> tuple:
        return self.blocks.shape[:2]

    def block(self, j: int, k: int) -> np.ndarray:
        return self.blocks[j, k]

    def hs_norms(self) -> np.ndarray:
        """Matrix of blockwise Hilbert-Schmidt norms."""
        w = self.grid.weights
        sq = np.einsum("r,jkrs,s->jk", w, self.blocks * self.blocks, w)
        return np.sqrt(np.maximum(sq, 0.0))

    def apply(self, curves: np.ndarray) -> np.ndarray:
        """Apply the block operator to a (p_cols, T) stack of curves."""
        arr = np.asarray(curves, dtype=float)
        p_rows, p_cols = self.shape
        if arr.shape != (p_cols, self.grid.size):
            raise DimensionError(
                f"expected ({p_cols}, {self.grid.size}) curve stack, got {arr.shape}"
            )
        weighted = arr * self.grid.weights
        return np.einsum("jkrs,ks->jr", self.blocks, weighted)


_FUNCTIONAL_KINDS = ("max", "frobenius", "linf")
_BLOCK_KINDS = ("max_q", "l1_q", "frobenius")


def functional_norms(M: BlockKernel, kind: str) -> float:
    """Norm of a block kernel built from blockwise Hilbert-Schmidt norms.

    kind = "max": largest block norm; "frobenius": root sum of squared
    block norms; "linf": largest row sum of block norms.
    """
    if kind not in _FUNCTIONAL_KINDS:
        raise UsageError(f"unknown norm kind {kind!r}; expected one of {_FUNCTIONAL_KINDS}")
    ns = M.hs_norms()
    if kind == "max":
        return float(ns.max())
    if kind == "frobenius":
        return float(np.sqrt(np.sum(ns * ns)))
    return float(ns.sum(axis=1).max())


def block_matrix_norms(B, q: int, kind: str) -> float:
    """Norm of a numeric matrix viewed as blocks of size q x q.

    kind = "max_q": largest blockwise Frobenius norm; "l1_q": largest
    column sum of blockwise Frobenius norms; "frobenius": plain Frobenius.
    With q = 1 these reduce to the elementwise max norm, the matrix 1-norm,
    and the Frobenius norm.
    """
    if kind not in _BLOCK_KINDS:
        raise UsageError(f"unknown norm kind {kind!r}; expected one of {_BLOCK_KINDS}")
    arr = np.asarray(B, dtype=float)
    if arr.ndim != 2:
        raise DimensionError("block matrix must be 2-d")
    q = int(q)
    if q < 1 or arr.shape[0] % q or arr.shape[1] % q:
        raise DimensionError(f"matrix shape {arr.shape} is not divisible into {q}x{q} blocks")
    if kind == "frobenius":
        return float(np.linalg.norm(arr))
    rows, cols = arr.shape[0] // q, arr.shape[1] // q
    blocks = arr.reshape(rows, q, cols, q)
    ns = np.sqrt(np.einsum("jakb,jakb->jk", blocks, blocks))
    if kind == "max_q":
        return float(ns.max())
    return float(ns.sum(axis=0).max())


@dataclass(frozen=True)
class Panel:
    """An (n, p, T) panel of curves observed on a common grid."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 3:
            raise DimensionError("panel values must be a 3-d array (n, p, T)")
        if arr.shape[2] != self.grid.size:
            raise DimensionError(
                f"panel has {arr.shape[2]} grid values, grid has {self.grid.size} points"
            )
        if not np.all(np.isfinite(arr)):
            raise DataError("panel contains non-finite values")
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> int:
        return self.values.shape[2]
