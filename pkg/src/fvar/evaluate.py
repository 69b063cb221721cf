"""Study harness: recovery metrics, reference fits, and rate experiments.

Support recovery is scored by sweeping each fitted penalty path and
comparing the active block pattern against the simulated truth; estimation
quality by the relative error of the reconstructed lag kernels.  The
oracle least-squares fit (true support known) and the fixed-q variants
give the comparison columns, and a separate experiment measures how the
lag-0 autocovariance error shrinks with the sample size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autocov import covariance_error, sample_autocovariance
from .errors import DataError, UsageError
from .grids import BlockKernel, Grid
from .pipeline import FitConfig, fit_fpca, fit_from_scores, truncate_components
from .simulate import Transition, gen_transition, simulate_panel
from .vfar import VfarDesign, psi_from_standardized, reconstruct_kernels

METHODS = ("ls_a", "ls_2", "ls_1")


# ---------------------------------------------------------------------------
# metrics

def roc_points(supports, truth: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """True/false positive rates for a sequence of estimated supports.

    supports is an iterable of (p, p) boolean matrices; truth must contain
    at least one edge and one non-edge.
    """
    truth = np.asarray(truth, dtype=bool)
    pos = truth.sum()
    neg = (~truth).sum()
    if pos == 0 or neg == 0:
        raise DataError("degenerate truth support: needs both edges and non-edges")
    tpr, fpr = [], []
    for est in supports:
        est = np.asarray(est, dtype=bool)
        if est.shape != truth.shape:
            raise DataError("estimated support shape does not match the truth")
        tpr.append((est & truth).sum() / pos)
        fpr.append((est & ~truth).sum() / neg)
    return np.asarray(fpr), np.asarray(tpr)


def auroc(fpr: np.ndarray, tpr: np.ndarray) -> float:
    """Area under the ROC polygon, anchored at (0, 0) and (1, 1)."""
    fpr = np.asarray(fpr, dtype=float)
    tpr = np.asarray(tpr, dtype=float)
    if fpr.shape != tpr.shape or fpr.ndim != 1:
        raise UsageError("fpr and tpr must be 1-d arrays of equal length")
    order = np.lexsort((tpr, fpr))
    x = np.concatenate([[0.0], fpr[order], [1.0]])
    y = np.concatenate([[0.0], tpr[order], [1.0]])
    return float(np.trapezoid(y, x))


def relative_error(est_kernels: list, truth_kernels: list) -> float:
    """Frobenius error of the lag kernels relative to the truth's norm."""
    if len(est_kernels) != len(truth_kernels):
        raise UsageError("estimate and truth must have the same number of lags")
    num = 0.0
    den = 0.0
    for est, tru in zip(est_kernels, truth_kernels):
        est.grid.require_match(tru.grid)
        diff = BlockKernel(est.blocks - tru.blocks, est.grid)
        num += float(np.sum(diff.hs_norms() ** 2))
        den += float(np.sum(tru.hs_norms() ** 2))
    if den == 0.0:
        raise UsageError("truth kernels are identically zero")
    return float(np.sqrt(num / den))


# ---------------------------------------------------------------------------
# reference fits

def oracle_ls(design: VfarDesign, truth_support: np.ndarray,
              ridge: float = 1e-10) -> tuple[list, dict]:
    """Least squares restricted to the true support, per response.

    Solves each response on the standardized design columns of its true
    predictor blocks, with a small ridge floor; returns coefficient
    matrices in original (non-standardized) coordinates plus diagnostics.
    """
    truth_support = np.asarray(truth_support, dtype=bool)
    if truth_support.shape != (design.p, design.p):
        raise UsageError("truth support must be (p, p)")
    psi = []
    flagged = []
    for j in range(design.p):
        idxs = [i for i, (h, k) in enumerate(design.block_index)
                if truth_support[j, k]]
        B = np.zeros((design.layout.total, design.q_sizes[j]))
        if idxs:
            rows = np.concatenate([
                np.arange(design.layout.starts[i],
                          design.layout.starts[i] + design.layout.sizes[i])
                for i in idxs
            ])
            G = design.gram[np.ix_(rows, rows)]
            c = design.z_std[:, rows].T @ design.responses[j]
            vals = np.linalg.eigvalsh(G)
            if vals[0] < 1e-10 * max(vals[-1], 1e-300):
                flagged.append(j)
            B[rows] = np.linalg.solve(G + ridge * np.eye(len(rows)), c)
        psi.append(psi_from_standardized(design, B))
    return psi, {"ridged_responses": flagged, "ridge": ridge}


# ---------------------------------------------------------------------------
# replicate-level run

@dataclass
class ReplicateResult:
    model: str
    n: int
    p: int
    rep: int
    auroc: dict            # method -> float
    errors: dict           # (method, criterion) -> float, criterion in bic/aic/oracle
    roc: dict              # method -> (fpr, tpr)
    q_selected: list
    diagnostics: dict


def path_supports(paths: list, design: VfarDesign) -> list:
    """Per path point, the (p, p) matrix of active predictor blocks."""
    num = len(paths[0].gammas)
    out = []
    for i in range(num):
        supp = np.zeros((design.p, design.p), dtype=bool)
        for j, pth in enumerate(paths):
            active = pth.supports[min(i, len(pth.gammas) - 1)]
            for idx, (h, k) in enumerate(design.block_index):
                if active[idx]:
                    supp[j, k] = True
        out.append(supp)
    return out


def run_replicate(model: str, n: int, p: int, seed: int, rep: int,
                  methods=METHODS, config: FitConfig = FitConfig(),
                  grid: Grid | None = None) -> ReplicateResult:
    """Simulate one panel and score every requested method on it."""
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; expected subset of {METHODS}")
    grid = grid or Grid.uniform()
    truth = gen_transition(model, p, seed, rep=rep)
    observed, _ = simulate_panel(truth, n, grid, seed=seed, rep=rep)
    truth_kernels = [truth.kernels(grid)]
    rep_seed = seed + 1000003 * rep

    store = 2 if ("ls_2" in methods) else 1
    fpca_full = fit_fpca(observed, config, rep_seed, store_extra=store)

    aurocs, errors, rocs = {}, {}, {}
    diagnostics = {}
    fit_a = None
    for method in methods:
        if method == "ls_a":
            fpca_list = [truncate_components(f, f.diagnostics["cv_q"]) for f in fpca_full]
        elif method == "ls_2":
            fpca_list = [truncate_components(f, min(2, f.q)) for f in fpca_full]
        else:
            fpca_list = [truncate_components(f, 1) for f in fpca_full]
        fit = fit_from_scores(fpca_list, grid, config, criterion="bic")
        if method == "ls_a":
            fit_a = fit
        supports = path_supports(fit.paths, fit.design)
        fpr, tpr = roc_points(supports, truth.support)
        aurocs[method] = auroc(fpr, tpr)
        rocs[method] = (fpr, tpr)
        for criterion in ("bic", "aic"):
            sel = [int(np.argmin(pth.bic if criterion == "bic" else pth.aic))
                   for pth in fit.paths]
            psi = [psi_from_standardized(fit.design, fit.paths[j].coefs[sel[j]])
                   for j in range(fit.design.p)]
            est = reconstruct_kernels(fpca_list, psi, fit.design, grid)
            errors[(method, criterion)] = relative_error(est, truth_kernels)
        diagnostics[method] = {
            "iterations": fit.diagnostics["iterations"],
            "restarts": fit.diagnostics["restarts"],
        }

    if fit_a is not None:
        psi_o, odiag = oracle_ls(fit_a.design, truth.support)
        fpca_list = [truncate_components(f, f.diagnostics["cv_q"]) for f in fpca_full]
        est = reconstruct_kernels(fpca_list, psi_o, fit_a.design, grid)
        errors[("ls_a", "oracle")] = relative_error(est, truth_kernels)
        diagnostics["oracle"] = odiag

    return ReplicateResult(
        model=model, n=n, p=p, rep=rep, auroc=aurocs, errors=errors, roc=rocs,
        q_selected=[f.diagnostics["cv_q"] for f in fpca_full],
        diagnostics=diagnostics,
    )


# ---------------------------------------------------------------------------
# studies

def run_study(models, sizes, methods, replicates: int, seed: int,
              criterion: str = "bic", config: FitConfig = FitConfig(),
              grid: Grid | None = None) -> dict:
    """Replicated simulation study over (model, size) cells."""
    replicates = int(replicates)
    if replicates < 1:
        raise UsageError("need at least one replicate")
    cells = []
    for model in models:
        for n, p in sizes:
            reps = [run_replicate(model, int(n), int(p), seed, r,
                                  methods=methods, config=config, grid=grid)
                    for r in range(replicates)]
            cells.append({"model": model, "n": int(n), "p": int(p), "reps": reps})
    return {"criterion": criterion, "cells": cells,
            "tables": summarize_study(cells), "roc": median_roc_curves(cells)}


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


def summarize_study(cells) -> list:
    """Long-form table rows: one row per cell, method and metric."""
    rows = []
    for cell in cells:
        reps = cell["reps"]
        methods = sorted({m for r in reps for m in r.auroc})
        for method in methods:
            mean, se = _mean_se([r.auroc[method] for r in reps])
            rows.append({"model": cell["model"], "n": cell["n"], "p": cell["p"],
                         "method": method, "metric": "auroc",
                         "mean": mean, "se": se, "replicates": len(reps)})
            for criterion in ("bic", "aic", "oracle"):
                vals = [r.errors[(method, criterion)] for r in reps
                        if (method, criterion) in r.errors]
                if not vals:
                    continue
                mean, se = _mean_se(vals)
                rows.append({"model": cell["model"], "n": cell["n"], "p": cell["p"],
                             "method": method, "metric": f"error_{criterion}",
                             "mean": mean, "se": se, "replicates": len(vals)})
    return rows


def median_roc_curves(cells) -> list:
    """The ROC polyline of the median-area replicate, per cell and method."""
    out = []
    for cell in cells:
        reps = cell["reps"]
        for method in sorted({m for r in reps for m in r.auroc}):
            scored = sorted((r.auroc[method], i) for i, r in enumerate(reps))
            _, med_idx = scored[(len(scored) - 1) // 2]
            fpr, tpr = reps[med_idx].roc[method]
            out.append({"model": cell["model"], "n": cell["n"], "p": cell["p"],
                        "method": method,
                        "fpr": [float(v) for v in fpr],
                        "tpr": [float(v) for v in tpr]})
    return out


# ---------------------------------------------------------------------------
# autocovariance concentration

def concentration_experiment(seed: int, p: int = 10, ns=(100, 200, 400, 800),
                             replicates: int = 20, a_values=(0.0, 0.6),
                             d: int = 5, grid: Grid | None = None) -> dict:
    """Error of the lag-0 autocovariance versus sample size.

    For each dependence level a, curves follow independent per-coordinate
    autoregressions with coefficient a (a = 0 gives i.i.d. samples), without
    measurement noise, and the blockwise-max error against the exact
    stationary covariance is recorded.  The returned slopes regress the log
    median error on log n.
    """
    if len(set(ns)) < 4:
        raise UsageError("need at least four distinct sample sizes for a slope")
    if replicates < 1:
        raise UsageError("need at least one replicate")
    grid = grid or Grid.uniform()
    rows = []
    slopes = []
    for ai, a in enumerate(a_values):
        if not 0 <= a < 1:
            raise UsageError("dependence level a must lie in [0, 1)")
        B = a * np.eye(p * d)
        transition = Transition(B=B, support=np.eye(p, dtype=bool), p=p, d=d,
                                model="banded", kappa=a if a > 0 else None,
                                seed=int(seed))
        truth = transition.covariance_kernel(grid)
        medians = []
        for ni, n in enumerate(ns):
            errs = []
            for r in range(replicates):
                rep_id = r + 1000 * ni + 100000 * ai
                _, latent = simulate_panel(transition, int(n), grid,
                                           noise_sd=0.0, seed=seed, rep=rep_id)
                est = sample_autocovariance(latent, 0)
                errs.append(covariance_error(est, truth, "max"))
            med = float(np.median(errs))
            medians.append(med)
            rows.append({"a": float(a), "n": int(n), "median_error": med,
                         "replicates": replicates})
        x = np.log(np.asarray(ns, dtype=float))
        y = np.log(np.asarray(medians))
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        dof = max(len(ns) - 2, 1)
        se = float(np.sqrt(resid @ resid / dof / np.sum((x - x.mean()) ** 2)))
        slopes.append({"a": float(a), "slope": float(slope),
                       "intercept": float(intercept), "se": se})
    return {"rows": rows, "slopes": slopes}
