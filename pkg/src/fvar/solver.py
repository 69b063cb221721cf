"""Accelerated proximal gradient solver for group-sparse least squares.

Minimizes, over a coefficient matrix X partitioned into row blocks,

    g(X) = 1/2 ||Y - Z X||_F^2 + gamma * sum_k ||X_k||_F,

given the Gram matrix Z'Z and cross product Z'Y.  The smooth part is
handled with constant-step gradient descent at step factor/lambda_max(Z'Z),
the penalty with the blockwise shrinkage operator, and convergence is
accelerated with momentum that restarts whenever the usual gradient-based
test fires; on restart the step is redone as a plain proximal gradient
step from the current iterate.  Iteration stops when the iterate change
falls below the tolerance, so the returned point is the fixed-point limit
rather than wherever noisy objective comparisons stall.  The recorded
trace holds the best objective value reached by the end of each
iteration, which is non-increasing by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError


@dataclass(frozen=True)
class SolverConfig:
    max_iter: int = 10000
    tol: float = 1e-8
    step_factor: float = 0.9

    def __post_init__(self):
        if not 0 < self.step_factor < 1:
            raise UsageError("step factor must lie in (0, 1)")
        if self.tol <= 0 or self.max_iter < 1:
            raise UsageError("tolerance must be positive and max_iter >= 1")


@dataclass(frozen=True)
class BlockLayout:
    """Row-block partition of the coefficient matrix."""

    sizes: tuple          # rows per block
    starts: np.ndarray = field(repr=False)

    @classmethod
    def from_sizes(cls, sizes) -> "BlockLayout":
        sizes = tuple(int(s) for s in sizes)
        if not sizes or min(sizes) < 1:
            raise UsageError("block sizes must be positive")
        starts = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
        return cls(sizes=sizes, starts=starts)

    @property
    def total(self) -> int:
        return int(self.starts[-1] + self.sizes[-1])

    @property
    def count(self) -> int:
        return len(self.sizes)

    def block_norms(self, X: np.ndarray) -> np.ndarray:
        sq = np.add.reduceat((X * X).sum(axis=1), self.starts)
        return np.sqrt(np.maximum(sq, 0.0))


def group_prox(X: np.ndarray, threshold: float, layout: BlockLayout) -> np.ndarray:
    """Blockwise shrinkage: scale each row block by (1 - threshold/norm)_+."""
    if threshold < 0:
        raise UsageError("threshold must be non-negative")
    if X.shape[0] != layout.total:
        raise UsageError(f"matrix has {X.shape[0]} rows, layout expects {layout.total}")
    if threshold == 0:
        return X.copy()
    norms = layout.block_norms(X)
    with np.errstate(divide="ignore", invalid="ignore"):
        factors = np.where(norms > threshold, 1.0 - threshold / norms, 0.0)
    row_factors = np.repeat(factors, layout.sizes)
    return X * row_factors[:, None]


def sym_max_eig(S: np.ndarray, rtol: float = 1e-10, max_iter: int = 1000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    d = S.shape[0]
    v = np.ones(d) + 1e-3 * np.arange(d)
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(max_iter):
        w = S @ v
        lam = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(lam - prev) <= rtol * max(abs(lam), 1e-300):
            return lam
        prev = lam
    return float(np.linalg.eigvalsh(S)[-1])


@dataclass
class SolverInfo:
    iterations: int
    restarts: int
    converged: bool
    objective: float
    trace: list


def _objective(X, gram, cross, y_sq, gamma, layout):
    quad = float(np.sum(X * (gram @ X)))
    lin = float(np.sum(cross * X))
    return 0.5 * y_sq - lin + 0.5 * quad + gamma * float(layout.block_norms(X).sum())


def block_fista(gram: np.ndarray, cross: np.ndarray, y_sq: float,
                layout: BlockLayout, gamma: float,
                config: SolverConfig = SolverConfig(),
                x0: np.ndarray | None = None,
                lam_max: float | None = None) -> tuple[np.ndarray, SolverInfo]:
    """Solve the group-sparse least-squares problem.

    Parameters are the normal-equation pieces: gram = Z'Z, cross = Z'Y,
    y_sq = ||Y||_F^2.  gamma is the group penalty weight in this
    standardized problem.  x0 warm-starts the iteration.
    """
    if gamma < 0:
        raise UsageError("penalty weight must be non-negative")
    r = layout.total
    if gram.shape != (r, r) or cross.shape[0] != r:
        raise UsageError("gram/cross shapes do not match the block layout")
    if lam_max is None:
        lam_max = sym_max_eig(gram)
    if lam_max <= 0:
        # zero design: solution is zero
        zero = np.zeros_like(cross)
        return zero, SolverInfo(0, 0, True, _objective(zero, gram, cross, y_sq, gamma, layout), [])

    step = config.step_factor / lam_max
    thr = step * gamma
    X = np.zeros_like(cross) if x0 is None else np.array(x0, dtype=float, copy=True)
    Ypt = X.copy()
    theta = 1.0
    g_last = _objective(X, gram, cross, y_sq, gamma, layout)
    best = g_last
    trace = [best]
    restarts = 0
    converged = False
    it = 0
    for it in range(1, config.max_iter + 1):
        grad = gram @ Ypt - cross
        cand = group_prox(Ypt - step * grad, thr, layout)
        proxy = float(np.sum((Ypt - cand) * (cand - X)))
        if proxy > 0:
            # momentum points the wrong way; redo as a plain step from X
            restarts += 1
            theta = 1.0
            grad = gram @ X - cross
            cand = group_prox(X - step * grad, thr, layout)
            Ypt = cand.copy()
        else:
            theta_next = (1.0 + np.sqrt(1.0 + 4.0 * theta * theta)) / 2.0
            Ypt = cand + ((theta - 1.0) / theta_next) * (cand - X)
            theta = theta_next
        g_last = _objective(cand, gram, cross, y_sq, gamma, layout)
        if not np.isfinite(g_last):
            raise NumericalError("solver objective is not finite; check the inputs")
        move = float(np.linalg.norm(cand - X))
        X = cand
        best = min(best, g_last)
        trace.append(best)
        if move <= config.tol * max(1.0, float(np.linalg.norm(cand))):
            converged = True
            break
    return X, SolverInfo(iterations=it, restarts=restarts, converged=converged,
                         objective=g_last, trace=trace)


def kkt_residual(gram, cross, X, gamma, layout: BlockLayout) -> float:
    """Largest blockwise violation of the stationarity conditions.

    Active blocks must satisfy grad_k + gamma X_k/||X_k|| = 0; inactive
    blocks must satisfy ||grad_k|| <= gamma.
    """
    grad = gram @ X - cross
    worst = 0.0
    for k in range(layout.count):
        sl = slice(layout.starts[k], layout.starts[k] + layout.sizes[k])
        Xk, gk = X[sl], grad[sl]
        nk = np.linalg.norm(Xk)
        if nk > 0:
            worst = max(worst, float(np.linalg.norm(gk + gamma * Xk / nk)))
        else:
            worst = max(worst, max(0.0, float(np.linalg.norm(gk)) - gamma))
    return worst
