"""End-to-end fit: smooth, cross-validate, solve, reconstruct.

The three stages are (1) per-variable penalized functional PCA with (q, eta)
chosen by K-fold cross-validation, (2) a warm-started group-penalty path per
response with AIC/BIC selection, and (3) kernel reconstruction and the
directed graph read-out.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import UsageError
from .fpca import FpcaResult, cv_select, regularized_fpca
from .grids import Panel
from .splines import DEFAULT_BASIS_SIZE, DEFAULT_DEGREE, make_basis
from .solver import SolverConfig
from .vfar import (
    PathSpec,
    VfarDesign,
    assemble_design,
    gamma_path,
    psi_from_standardized,
    reconstruct_kernels,
    select_by_criterion,
)

DEFAULT_Q_GRID = (1, 2, 3, 4, 5, 6)
DEFAULT_ETA_GRID = (0.0, 1e-6, 1e-5, 1e-4, 1e-3)


@dataclass(frozen=True)
class FitConfig:
    L: int = 1
    q_grid: tuple = DEFAULT_Q_GRID
    eta_grid: tuple = DEFAULT_ETA_GRID
    folds: int = 5
    criterion: str = "bic"
    basis_size: int = DEFAULT_BASIS_SIZE
    degree: int = DEFAULT_DEGREE
    path: PathSpec = PathSpec()
    # support ranking and information criteria are insensitive below 1e-4
    solver: SolverConfig = SolverConfig(tol=1e-4)
    q_fixed: int | None = None   # override CV's q, keep its eta

    def __post_init__(self):
        if self.criterion not in ("aic", "bic"):
            raise UsageError("criterion must be 'aic' or 'bic'")
        if self.q_fixed is not None and self.q_fixed < 1:
            raise UsageError("fixed q must be positive")


def truncate_components(res: FpcaResult, q: int) -> FpcaResult:
    """Keep the leading q components of a fitted result."""
    if q > res.q:
        raise UsageError(f"cannot truncate to {q} components, only {res.q} fitted")
    if q == res.q:
        return res
    return replace(res, q=q, eigenvalues=res.eigenvalues[:q], phi=res.phi[:q],
                   zeta=res.zeta[:q], scores=res.scores[:, :q])


def fit_fpca(panel: Panel, config: FitConfig, seed: int,
             store_extra: int = 0) -> list:
    """Cross-validated principal components for every variable.

    store_extra asks each fit to keep at least that many components (so a
    study can later truncate to fixed small q without refitting).
    """
    basis = make_basis(panel.grid, config.basis_size, config.degree)
    out = []
    for j in range(panel.p):
        curves = panel.values[:, j, :]
        sel = cv_select(curves, basis, config.q_grid, config.eta_grid,
                        config.folds, seed)
        q_fit = max(sel.q, store_extra)
        q_fit = min(q_fit, min(panel.n, basis.size))
        res = regularized_fpca(curves, basis, q_fit, sel.eta)
        res.diagnostics["cv_q"] = sel.q
        res.diagnostics["cv_eta"] = sel.eta
        out.append(res)
    return out


@dataclass
class VfarFit:
    L: int
    criterion: str
    design: VfarDesign
    fpca: list                    # FpcaResult per variable
    paths: list                   # ResponsePath per response
    selected: np.ndarray          # path index per response
    gammas: np.ndarray            # selected penalty per response
    dfs: np.ndarray
    rss: np.ndarray
    psi: list                     # (r, q_j) coefficients per response
    kernels: list                 # BlockKernel per lag
    edges: list                   # (source k, target j, lag h, hs norm)
    diagnostics: dict = field(default_factory=dict)

    def edge_set(self) -> list:
        """Distinct (source, target) pairs, sorted by target then source."""
        pairs = sorted({(k, j) for k, j, _, _ in self.edges}, key=lambda e: (e[1], e[0]))
        return pairs


def fit_from_scores(fpca_list: list, grid, config: FitConfig,
                    criterion: str | None = None) -> VfarFit:
    """Stages 2-3 given fitted components: penalty paths, selection, kernels."""
    criterion = criterion or config.criterion
    design = assemble_design([f.scores for f in fpca_list], config.L)
    paths = [gamma_path(design, j, config.path, config.solver)
             for j in range(design.p)]
    selected = np.array([select_by_criterion(pth, criterion) for pth in paths])
    gammas = np.array([paths[j].gammas[selected[j]] for j in range(design.p)])
    dfs = np.array([paths[j].df[selected[j]] for j in range(design.p)])
    rss = np.array([paths[j].rss[selected[j]] for j in range(design.p)])
    psi = [psi_from_standardized(design, paths[j].coefs[selected[j]])
           for j in range(design.p)]
    kernels = reconstruct_kernels(fpca_list, psi, design, grid)
    edges = kernel_edges(kernels)
    diag = {
        "iterations": [int(sum(info.iterations for info in pth.solver)) for pth in paths],
        "restarts": [int(sum(info.restarts for info in pth.solver)) for pth in paths],
        "final_obj": [float(pth.solver[selected[j]].objective)
                      for j, pth in enumerate(paths)],
        "floored_blocks": list(design.floored_blocks),
        "rss_floored": [bool(pth.rss_floored) for pth in paths],
    }
    return VfarFit(L=config.L, criterion=criterion, design=design,
                   fpca=fpca_list, paths=paths, selected=selected,
                   gammas=gammas, dfs=dfs, rss=rss, psi=psi, kernels=kernels,
                   edges=edges, diagnostics=diag)


def kernel_edges(kernels: list, tol: float = 0.0) -> list:
    """Edge rows (source, target, lag, hs_norm) for every non-null block."""
    rows = []
    for h, K in enumerate(kernels, start=1):
        ns = K.hs_norms()
        p_rows, p_cols = ns.shape
        for j in range(p_rows):
            for k in range(p_cols):
                if ns[j, k] > tol:
                    rows.append((k, j, h, float(ns[j, k])))
    rows.sort(key=lambda r: (r[1], r[0], r[2]))
    return rows


def fit_vfar(panel: Panel, seed: int, config: FitConfig = FitConfig()) -> VfarFit:
    """Full pipeline on an observed panel."""
    if config.q_fixed is not None:
        fpca_list = fit_fpca(panel, config, seed, store_extra=config.q_fixed)
        fpca_list = [truncate_components(f, min(config.q_fixed, f.q)) for f in fpca_list]
    else:
        fpca_list = fit_fpca(panel, config, seed)
    return fit_from_scores(fpca_list, panel.grid, config)
