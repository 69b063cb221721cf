"""Figure rendering for the report paths of the command line tool.

All figures go straight to files through the Agg backend, with fixed
sizes, no timestamps and no software metadata, so repeated runs with the
same inputs produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE = {"dpi": 120, "metadata": {"Software": None}}


def _finish(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, **_SAVE)
    plt.close(fig)
    return path


def stability_figure(rows: list, path) -> Path:
    """Operator norm and stability measure against the diagonal level a.

    rows come from figure_curves: one dict per (a, b) pair with keys a, b,
    op_norm and m_fx.  Left panel: operator norm; right panel: stability
    measure; one line per off-diagonal level b.
    """
    b_values = sorted({row["b"] for row in rows})
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for key, ax, label in (("op_norm", axes[0], "operator norm"),
                           ("m_fx", axes[1], "stability measure")):
        for b in b_values:
            sub = sorted((r for r in rows if r["b"] == b), key=lambda r: r["a"])
            ax.plot([r["a"] for r in sub], [r[key] for r in sub],
                    label=f"b = {b:g}")
        ax.set_xlabel("a")
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    axes[1].set_yscale("log")
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    return _finish(fig, path)


def roc_figure(curves: list, path) -> Path:
    """ROC polylines, one per (model, n, p, method) row."""
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    for row in curves:
        label = f"{row['model']} n={row['n']} p={row['p']} {row['method']}"
        ax.plot(row["fpr"], row["tpr"], marker=".", markersize=3, label=label)
    ax.plot([0, 1], [0, 1], color="grey", linestyle=":", linewidth=1)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=7, loc="lower right")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def concentration_figure(rows: list, slopes: list, path) -> Path:
    """Median autocovariance error against sample size on log-log axes."""
    fig, ax = plt.subplots(figsize=(4.8, 4.2))
    for spec in slopes:
        a = spec["a"]
        sub = sorted((r for r in rows if r["a"] == a), key=lambda r: r["n"])
        ax.loglog([r["n"] for r in sub], [r["median_error"] for r in sub],
                  marker="o", markersize=4,
                  label=f"a = {a:g} (slope {spec['slope']:.2f})")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("median max-block error")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return _finish(fig, path)


def eigenfunction_figure(fpca_list: list, grid, path, max_vars: int = 4) -> Path:
    """Leading eigenfunctions for the first few variables."""
    m = min(len(fpca_list), max_vars)
    fig, axes = plt.subplots(1, m, figsize=(3.0 * m, 2.8), squeeze=False)
    for j in range(m):
        ax = axes[0, j]
        res = fpca_list[j]
        for l in range(res.q):
            ax.plot(grid.points, res.phi[l], label=f"l = {l + 1}", linewidth=1)
        ax.set_title(f"variable {j + 1}", fontsize=9)
        ax.set_xlabel("u")
        ax.grid(True, alpha=0.3)
    axes[0, 0].set_ylabel("eigenfunction")
    axes[0, 0].legend(fontsize=7)
    fig.tight_layout()
    return _finish(fig, path)


def edge_norm_figure(kernels: list, path) -> Path:
    """Heat map of blockwise kernel norms, maximized over lags."""
    import numpy as np

    norms = np.maximum.reduce([K.hs_norms() for K in kernels])
    fig, ax = plt.subplots(figsize=(4.6, 4.2))
    im = ax.imshow(norms, cmap="viridis", origin="upper")
    ax.set_xlabel("source variable k")
    ax.set_ylabel("target variable j")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    return _finish(fig, path)
