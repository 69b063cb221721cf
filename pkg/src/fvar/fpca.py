"""Penalized functional principal components through a spline basis.

Each curve is smoothed onto a B-spline basis by penalized least squares,
and principal directions maximize the penalized variance ratio

    var(<phi, X>) / ( <phi, phi> + eta <phi'', phi''> ),

solved as a symmetric eigenproblem: with Gram matrix J, roughness matrix Q
and basis coefficients delta (one row per curve),

    U  = J delta' delta J / n,
    J + eta Q = P1 S1^{-2} P1',
    eigendecompose S1 P1' U P1 S1 = sum_l lambda_l x_l x_l',
    zeta_l = P1 S1 x_l,  phi_l = zeta_l' b(u) scaled so <phi_l, phi_l> = 1.

The eigenvalues lambda_l are the penalized variances in decreasing order;
at eta = 0 they are the sample variances of the scores.  Distinct
components are orthogonal in the penalized inner product.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError
from .grids import Grid
from .rng import STREAM_CV, stream
from .splines import SplineBasis, penalty_matrices

COEF_RIDGE = 1e-10
_SIGN_TOL = 1e-10


def smooth_coefficients(curves: np.ndarray, basis: SplineBasis,
                        ridge: float = COEF_RIDGE) -> np.ndarray:
    """Penalized least-squares basis coefficients, one row per curve.

    Minimizes the quadrature-weighted squared error plus a small ridge
    term for conditioning.
    """
    Y = np.atleast_2d(np.asarray(curves, dtype=float))
    if Y.shape[1] != basis.grid.size:
        raise UsageError(
            f"curves have {Y.shape[1]} values, basis grid has {basis.grid.size} points"
        )
    w = basis.grid.weights
    J = (basis.values * w) @ basis.values.T
    rhs = Y @ (basis.values * w).T  # (n, G)
    K = J + ridge * np.eye(basis.size)
    return np.linalg.solve(K, rhs.T).T


@dataclass(frozen=True)
class FpcaResult:
    """Fitted principal components for one variable's curves."""

    basis: SplineBasis
    q: int
    eta: float
    eigenvalues: np.ndarray          # (q,)
    phi: np.ndarray                  # (q, T) eigenfunction values
    zeta: np.ndarray                 # (q, G) eigenfunction basis coefficients
    scores: np.ndarray               # (n, q) scores of the centered curves
    mean: np.ndarray                 # (T,) smoothed mean curve
    mean_coef: np.ndarray            # (G,)
    diagnostics: dict = field(default_factory=dict)

    @property
    def grid(self) -> Grid:
        return self.basis.grid


def _penalized_eigh(delta_centered: np.ndarray, J: np.ndarray, Q: np.ndarray,
                    eta: float) -> tuple[np.ndarray, np.ndarray]:
    """All eigenvalues (descending) and J-normalized coefficient vectors."""
    n = delta_centered.shape[0]
    U = J @ (delta_centered.T @ delta_centered / n) @ J
    K = J + eta * Q
    K = (K + K.T) / 2.0
    vals, P1 = np.linalg.eigh(K)
    if vals[0] <= vals[-1] * 1e-14 or vals[0] <= 0:
        raise NumericalError(
            "J + eta*Q is numerically singular; enlarge the grid or reduce the basis"
        )
    S1 = vals**-0.5
    M = (S1[:, None] * P1.T) @ U @ (P1 * S1[None, :])
    M = (M + M.T) / 2.0
    lam, X = np.linalg.eigh(M)
    order = np.argsort(lam)[::-1]
    lam = lam[order]
    Z = P1 @ (S1[:, None] * X[:, order])  # columns are zeta_l
    norms = np.sqrt(np.einsum("gl,gh,hl->l", Z, J, Z))
    Z = Z / norms[None, :]
    return lam, Z


def _canonical_signs(phi: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sign multipliers making each eigenfunction's integral non-negative.

    When the integral is essentially zero, the first significantly nonzero
    value is made positive instead.
    """
    signs = np.ones(phi.shape[0])
    integrals = phi @ weights
    for l in range(phi.shape[0]):
        if integrals[l] < -_SIGN_TOL:
            signs[l] = -1.0
        elif abs(integrals[l]) <= _SIGN_TOL:
            row = phi[l]
            sig = np.abs(row) > 1e-8 * max(np.abs(row).max(), 1e-300)
            if sig.any() and row[np.argmax(sig)] < 0:
                signs[l] = -1.0
    return signs


def regularized_fpca(curves: np.ndarray, basis: SplineBasis, q: int,
                     eta: float = 0.0, ridge: float = COEF_RIDGE) -> FpcaResult:
    """Fit q penalized principal components to an (n, T) stack of curves."""
    Y = np.atleast_2d(np.asarray(curves, dtype=float))
    n = Y.shape[0]
    q = int(q)
    if q < 1 or q > min(n, basis.size):
        raise UsageError(f"q must lie in [1, min(n, G)] = [1, {min(n, basis.size)}]")
    if eta < 0:
        raise UsageError("roughness weight eta must be non-negative")
    if eta > 0 and basis.degree < 2:
        raise UsageError("roughness penalty requires a basis of degree >= 2")
    J, Q = penalty_matrices(basis)

    delta = smooth_coefficients(Y, basis, ridge)
    mean_coef = delta.mean(axis=0)
    centered = delta - mean_coef
    lam, Z = _penalized_eigh(centered, J, Q, eta)

    zeta = Z[:, :q].T                      # (q, G)
    phi = zeta @ basis.values              # (q, T)
    signs = _canonical_signs(phi, basis.grid.weights)
    zeta = zeta * signs[:, None]
    phi = phi * signs[:, None]

    mean_curve = mean_coef @ basis.values
    scores = fpc_scores(Y - mean_curve, phi, basis.grid)
    return FpcaResult(
        basis=basis, q=q, eta=float(eta),
        eigenvalues=lam[:q], phi=phi, zeta=zeta, scores=scores,
        mean=mean_curve, mean_coef=mean_coef,
        diagnostics={"n": n, "all_eigenvalues": lam},
    )


def fpc_scores(curves: np.ndarray, phi: np.ndarray, grid: Grid) -> np.ndarray:
    """Quadrature inner products of each curve with each eigenfunction."""
    Y = np.atleast_2d(np.asarray(curves, dtype=float))
    P = np.atleast_2d(np.asarray(phi, dtype=float))
    if Y.shape[1] != grid.size or P.shape[1] != grid.size:
        raise UsageError("curves, eigenfunctions and grid sizes do not match")
    return Y @ (P * grid.weights).T


@dataclass(frozen=True)
class CvSelection:
    q: int
    eta: float
    table: np.ndarray        # (n_eta, n_q) mean held-out errors
    q_grid: tuple
    eta_grid: tuple


def cv_select(curves: np.ndarray, basis: SplineBasis, q_grid, eta_grid,
              folds: int, seed: int, ridge: float = COEF_RIDGE) -> CvSelection:
    """K-fold cross-validation over (q, eta).

    Held-out curves are reconstructed from training eigenfunctions with
    projection scores; the error is the plain squared difference averaged
    over folds and grid points.  Ties (within a small relative and
    data-scaled absolute tolerance) go to the smaller q, then smaller eta.
    """
    Y = np.atleast_2d(np.asarray(curves, dtype=float))
    n = Y.shape[0]
    q_grid = tuple(int(q) for q in q_grid)
    eta_grid = tuple(float(e) for e in eta_grid)
    if not q_grid or not eta_grid:
        raise UsageError("q and eta grids must be non-empty")
    if min(q_grid) < 1:
        raise UsageError("q grid values must be positive")
    if min(eta_grid) < 0:
        raise UsageError("eta grid values must be non-negative")
    if max(eta_grid) > 0 and basis.degree < 2:
        raise UsageError("roughness penalty requires a basis of degree >= 2")
    folds = int(folds)
    if folds < 2:
        raise UsageError("cross-validation needs at least 2 folds")
    if folds > n:
        raise UsageError(f"{folds} folds would leave empty folds with n = {n}")
    qmax = max(q_grid)

    perm = stream(seed, STREAM_CV).permutation(n)
    parts = np.array_split(perm, folds)
    J, Q = penalty_matrices(basis)
    w = basis.grid.weights
    T = basis.grid.size

    if qmax > min(basis.size, n - max(len(part) for part in parts)):
        raise UsageError("q grid exceeds the training size or basis size")

    total = np.zeros((len(eta_grid), len(q_grid)))
    for part in parts:
        mask = np.ones(n, dtype=bool)
        mask[part] = False
        train, held = Y[mask], Y[part]
        delta = smooth_coefficients(train, basis, ridge)
        mean_coef = delta.mean(axis=0)
        mean_curve = mean_coef @ basis.values
        centered_held = held - mean_curve
        for ei, eta in enumerate(eta_grid):
            lam, Z = _penalized_eigh(delta - mean_coef, J, Q, eta)
            phi = Z[:, :qmax].T @ basis.values
            xi = centered_held @ (phi * w).T          # (n_held, qmax)
            resid = centered_held.copy()
            comp_err = np.empty(qmax)
            for l in range(qmax):
                resid -= xi[:, l:l + 1] * phi[l][None, :]
                comp_err[l] = np.sum(resid * resid)
            for qi, q in enumerate(q_grid):
                total[ei, qi] += comp_err[q - 1]
    table = total / (folds * T)

    scale = float(np.mean(Y * Y)) * n / folds + 1e-300
    best = table.min()
    tol = 1e-6 * best + 1e-9 * scale
    candidates = [
        (q_grid[qi], eta_grid[ei])
        for ei in range(len(eta_grid))
        for qi in range(len(q_grid))
        if table[ei, qi] <= best + tol
    ]
    q_sel, eta_sel = min(candidates)
    return CvSelection(q=q_sel, eta=eta_sel, table=table,
                       q_grid=q_grid, eta_grid=eta_grid)
