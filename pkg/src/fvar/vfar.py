"""Sparse functional autoregression on principal-component scores.

With per-variable scores xi_tj (rows t = 1..n, q_j columns), a lag-L fit
for response variable j solves

    min over Psi:  1/2 || V_0j - sum_{h,k} V_hk Psi_hjk ||_F^2
                   + gamma * sum_{h,k} || V_hk Psi_hjk ||_F,

where V_hk holds the scores of variable k shifted by lag h.  Each predictor
block is standardized by D_hk = ((n-L)^{-1} V_hk' V_hk)^{1/2}, so the solver
works on B = D Psi with an equivalent objective, and the reported
coefficients are Psi = D^{-1} B.  The penalty zeroes whole (h, k) blocks,
which is read directly as the absence of a directed edge k -> j.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, UsageError
from .grids import BlockKernel, Grid
from .solver import BlockLayout, SolverConfig, SolverInfo, block_fista, sym_max_eig


@dataclass(frozen=True)
class PathSpec:
    """Log-spaced penalty path from the all-zero point downward."""

    num: int = 50
    eps: float = 1e-3
    gammas: tuple | None = None   # explicit values override num/eps

    def __post_init__(self):
        if self.gammas is None:
            if self.num < 1:
                raise UsageError("path needs at least one point")
            if not 0 < self.eps <= 1:
                raise UsageError("path eps must lie in (0, 1]")
        else:
            object.__setattr__(self, "gammas", tuple(float(g) for g in self.gammas))
            if any(g < 0 for g in self.gammas):
                raise UsageError("explicit path values must be non-negative")

    def values(self, gamma_max: float) -> np.ndarray:
        if self.gammas is not None:
            return np.asarray(self.gammas, dtype=float)
        if self.num == 1:
            return np.array([gamma_max])
        return gamma_max * np.exp(
            np.linspace(0.0, np.log(self.eps), self.num)
        )


@dataclass(frozen=True)
class VfarDesign:
    """Score design for a lag-L fit shared by all responses."""

    L: int
    n: int
    p: int
    q_sizes: tuple                    # per variable
    responses: list = field(repr=False)     # V_0j, each (N, q_j)
    z_std: np.ndarray = field(repr=False)   # (N, r) standardized predictors
    layout: BlockLayout = field(repr=False)
    block_index: tuple = field(repr=False)  # ((h, k), ...) matching layout order
    d_invs: list = field(repr=False)        # per block, (q_k, q_k)
    d_mats: list = field(repr=False)
    gram: np.ndarray = field(repr=False)
    lam_max: float
    floored_blocks: tuple = ()

    @property
    def N(self) -> int:
        return self.n - self.L

    def gamma_max(self, j: int) -> float:
        cross = self.z_std.T @ self.responses[j]
        norms = self.layout.block_norms(cross)
        return float(norms.max()) / np.sqrt(self.N)


def _sym_sqrt_with_floor(M: np.ndarray, rel_floor: float = 1e-10):
    vals, vecs = np.linalg.eigh((M + M.T) / 2.0)
    top = max(vals[-1], 0.0)
    if top == 0.0:
        raise NumericalError("a predictor block has zero variance")
    floor = rel_floor * top
    floored = bool(vals[0] < floor)
    vals = np.maximum(vals, floor)
    root = vecs @ np.diag(np.sqrt(vals)) @ vecs.T
    inv_root = vecs @ np.diag(vals**-0.5) @ vecs.T
    return root, inv_root, floored


def assemble_design(scores: list, L: int = 1) -> VfarDesign:
    """Build lagged response/predictor matrices from per-variable scores.

    scores[j] is the (n, q_j) score matrix of variable j.  Row i of the
    lag-h predictor matrix holds the scores at time L + i - h, so all
    matrices share N = n - L rows.
    """
    L = int(L)
    if L < 1:
        raise UsageError("lag order must be at least 1")
    mats = [np.atleast_2d(np.asarray(s, dtype=float)) for s in scores]
    n = mats[0].shape[0]
    if any(m.shape[0] != n for m in mats):
        raise UsageError("all variables must have the same number of samples")
    if n - L < 2:
        raise UsageError(f"lag {L} leaves fewer than 2 usable rows out of n = {n}")
    p = len(mats)
    N = n - L

    responses = [m[L:n] for m in mats]
    block_index = []
    cols = []
    d_mats, d_invs = [], []
    sizes = []
    floored = []
    for h in range(1, L + 1):
        for k in range(p):
            V = mats[k][L - h:n - h]
            D2 = V.T @ V / N
            D, Dinv, was_floored = _sym_sqrt_with_floor(D2)
            if was_floored:
                floored.append((h, k))
            block_index.append((h, k))
            cols.append(V @ Dinv)
            d_mats.append(D)
            d_invs.append(Dinv)
            sizes.append(V.shape[1])
    z = np.concatenate(cols, axis=1)
    layout = BlockLayout.from_sizes(sizes)
    gram = z.T @ z
    return VfarDesign(
        L=L, n=n, p=p, q_sizes=tuple(m.shape[1] for m in mats),
        responses=responses, z_std=z, layout=layout,
        block_index=tuple(block_index), d_invs=d_invs, d_mats=d_mats,
        gram=gram, lam_max=sym_max_eig(gram), floored_blocks=tuple(floored),
    )


def psi_from_standardized(design: VfarDesign, B: np.ndarray) -> np.ndarray:
    """Map standardized coefficients back: Psi block = D^{-1} B block."""
    out = np.empty_like(B)
    for idx in range(design.layout.count):
        sl = slice(design.layout.starts[idx],
                   design.layout.starts[idx] + design.layout.sizes[idx])
        out[sl] = design.d_invs[idx] @ B[sl]
    return out


def solve_response(design: VfarDesign, j: int, gamma: float,
                   config: SolverConfig = SolverConfig(),
                   x0: np.ndarray | None = None) -> tuple[np.ndarray, SolverInfo]:
    """Solve one response at one penalty value; returns (B, info)."""
    if not 0 <= j < design.p:
        raise UsageError(f"response index {j} out of range")
    if gamma < 0:
        raise UsageError("penalty must be non-negative")
    V0 = design.responses[j]
    cross = design.z_std.T @ V0
    y_sq = float(np.sum(V0 * V0))
    gamma_eff = gamma * np.sqrt(design.N)
    return block_fista(design.gram, cross, y_sq, design.layout, gamma_eff,
                       config, x0=x0, lam_max=design.lam_max)


@dataclass
class ResponsePath:
    j: int
    gammas: np.ndarray
    coefs: np.ndarray        # (num, r, q_j) standardized solutions
    rss: np.ndarray
    df: np.ndarray
    aic: np.ndarray
    bic: np.ndarray
    supports: np.ndarray     # (num, n_blocks) bool
    solver: list             # SolverInfo per point
    rss_floored: bool = False


def degrees_of_freedom(design: VfarDesign, B: np.ndarray, gamma: float) -> float:
    """Model complexity of one response fit.

    Each active block contributes one indicator degree plus its remaining
    q_j*q_k - 1 directions damped by fitted energy e/(e + gamma), where e
    is the squared fitted norm ||V Psi||_F^2 = N ||B||_F^2.
    """
    q_j = B.shape[1]
    norms = design.layout.block_norms(B)
    df = 0.0
    for idx, nb in enumerate(norms):
        if nb > 0:
            e = design.N * nb * nb
            q_k = design.layout.sizes[idx]
            df += 1.0 + (q_j * q_k - 1.0) * e / (e + gamma)
    return df


def information_criteria(design: VfarDesign, j: int, B: np.ndarray,
                         gamma: float) -> dict:
    """RSS, degrees of freedom, AIC and BIC for one response fit."""
    V0 = design.responses[j]
    resid = V0 - design.z_std @ B
    rss = float(np.sum(resid * resid))
    df = degrees_of_freedom(design, B, gamma)
    n = design.n
    floored = rss < 1e-300
    log_rss = float(np.log(max(rss, 1e-300)))
    return {
        "rss": rss,
        "df": df,
        "aic": n * log_rss + 2.0 * df,
        "bic": n * log_rss + np.log(n) * df,
        "rss_floored": floored,
    }


def gamma_path(design: VfarDesign, j: int, path: PathSpec = PathSpec(),
               config: SolverConfig = SolverConfig()) -> ResponsePath:
    """Warm-started fits for one response along a decreasing penalty path."""
    gmax = design.gamma_max(j)
    if gmax == 0.0:
        gammas = np.zeros(1 if path.gammas is None else len(path.gammas))
    else:
        gammas = path.values(gmax)
    num = len(gammas)
    r = design.layout.total
    q_j = design.q_sizes[j]
    coefs = np.zeros((num, r, q_j))
    rss = np.zeros(num)
    df = np.zeros(num)
    aic = np.zeros(num)
    bic = np.zeros(num)
    supports = np.zeros((num, design.layout.count), dtype=bool)
    infos = []
    x0 = None
    any_floor = False
    for i, g in enumerate(gammas):
        B, info = solve_response(design, j, float(g), config, x0=x0)
        x0 = B
        ic = information_criteria(design, j, B, float(g))
        coefs[i] = B
        rss[i], df[i] = ic["rss"], ic["df"]
        aic[i], bic[i] = ic["aic"], ic["bic"]
        any_floor = any_floor or ic["rss_floored"]
        supports[i] = design.layout.block_norms(B) > 0
        infos.append(info)
    return ResponsePath(j=j, gammas=gammas, coefs=coefs, rss=rss, df=df,
                        aic=aic, bic=bic, supports=supports, solver=infos,
                        rss_floored=any_floor)


def select_by_criterion(path: ResponsePath, criterion: str = "bic") -> int:
    """Index of the path point minimizing the requested criterion."""
    if criterion not in ("aic", "bic"):
        raise UsageError(f"unknown criterion {criterion!r}; expected 'aic' or 'bic'")
    values = path.aic if criterion == "aic" else path.bic
    return int(np.argmin(values))


def reconstruct_kernels(fpca_list, psi_per_response: list, design: VfarDesign,
                        grid: Grid) -> list:
    """Lag kernels from score coefficients and eigenfunctions.

    The (j, k) block of the lag-h kernel evaluates, on the grid,
    A_hjk(u, v) = phi_k(v)' Psi_hjk phi_j(u).  Returns one BlockKernel per
    lag h = 1..L.  Blocks that are exactly zero in Psi stay exactly zero.
    """
    p = design.p
    T = grid.size
    kernels = []
    for h in range(1, design.L + 1):
        blocks = np.zeros((p, p, T, T))
        for j in range(p):
            psi = psi_per_response[j]
            phi_j = fpca_list[j].phi
            for idx, (hh, k) in enumerate(design.block_index):
                if hh != h:
                    continue
                sl = slice(design.layout.starts[idx],
                           design.layout.starts[idx] + design.layout.sizes[idx])
                block = psi[sl]
                if not block.any():
                    continue
                phi_k = fpca_list[k].phi
                blocks[j, k] = np.einsum("ms,ml,lr->rs", phi_k, block, phi_j)
        kernels.append(BlockKernel(blocks, grid))
    return kernels


def granger_graph(kernels: list, tol: float = 0.0) -> list:
    """Directed edges (k -> j) where some lag kernel block is non-null.

    An edge is reported when max over h of the block's Hilbert-Schmidt norm
    exceeds tol.  Returns (source, target) pairs sorted by target then
    source.
    """
    if tol < 0:
        raise UsageError("tolerance must be non-negative")
    if not kernels:
        raise UsageError("need at least one lag kernel")
    norms = np.maximum.reduce([K.hs_norms() for K in kernels])
    p_rows, p_cols = norms.shape
    return [(k, j) for j in range(p_rows) for k in range(p_cols) if norms[j, k] > tol]


@dataclass
class LiftedTransition:
    """Companion form of a lag-L kernel family as a single lag-1 operator.

    The state stacks (X_t, ..., X_{t-L+1}); the top block row applies the
    lag kernels and the remaining rows shift the stack down unchanged (the
    identity blocks act as exact copies rather than stored kernels).
    """

    kernels: list              # BlockKernel per lag, all (p, p)
    grid: Grid

    @property
    def L(self) -> int:
        return len(self.kernels)

    @property
    def p(self) -> int:
        return self.kernels[0].shape[0]

    def apply(self, state: np.ndarray) -> np.ndarray:
        """Apply to a (L*p, T) stacked curve state."""
        arr = np.asarray(state, dtype=float)
        p, L = self.p, self.L
        if arr.shape != (L * p, self.grid.size):
            raise UsageError(f"state must be ({L * p}, {self.grid.size})")
        top = np.zeros((p, self.grid.size))
        for h, K in enumerate(self.kernels, start=1):
            top += K.apply(arr[(h - 1) * p: h * p])
        return np.concatenate([top, arr[: (L - 1) * p]], axis=0)


def lift_to_var1(kernels: list):
    """Companion lifting of a lag-L kernel family.

    For L = 1 the single kernel is returned unchanged; otherwise a
    LiftedTransition applying the stacked first-order recursion.
    """
    if not kernels:
        raise UsageError("need at least one lag kernel")
    shapes = {K.shape for K in kernels}
    if len(shapes) != 1 or kernels[0].shape[0] != kernels[0].shape[1]:
        raise UsageError("lag kernels must all be square with equal shape")
    for K in kernels[1:]:
        kernels[0].grid.require_match(K.grid)
    if len(kernels) == 1:
        return kernels[0]
    return LiftedTransition(kernels=list(kernels), grid=kernels[0].grid)
