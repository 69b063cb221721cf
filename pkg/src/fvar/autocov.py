"""Sample autocovariance of a panel of curves.

The lag-h autocovariance of a p-variable panel is the p x p block kernel
whose (j, k) block is

    (n - h)^{-1} sum_{t=1}^{n-h} X_{tj}(u) X_{(t+h)k}(v),

the average of cross products between each curve and the curve h steps
later.  Curves are taken as given; centering is optional and off by
default because fitted pipelines center once upstream.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, UsageError
from .grids import BlockKernel, Panel, functional_norms


def center_panel(panel: Panel) -> Panel:
    """Subtract the pointwise sample mean of each variable."""
    mean = panel.values.mean(axis=0, keepdims=True)
    return Panel(panel.values - mean, panel.grid)


def sample_autocovariance(panel: Panel, h: int, center: bool = False) -> BlockKernel:
    """Lag-h sample autocovariance as a block kernel.

    The denominator is n - h, the number of terms in the sum.
    """
    h = int(h)
    if h < 0:
        raise UsageError("lag must be non-negative")
    n = panel.n
    if h >= n:
        raise UsageError(f"lag {h} needs at least {h + 1} samples, panel has {n}")
    if center:
        panel = center_panel(panel)
    X = panel.values
    head = X[: n - h]
    tail = X[h:n]
    blocks = np.einsum("tjr,tks->jkrs", head, tail) / (n - h)
    return BlockKernel(blocks, panel.grid)


def covariance_error(est: BlockKernel, truth: BlockKernel, kind: str = "max") -> float:
    """Norm of the difference between two block kernels.

    kind = "max" or "frobenius" (see functional_norms).
    """
    if kind not in ("max", "frobenius"):
        raise UsageError(f"unknown error kind {kind!r}; expected 'max' or 'frobenius'")
    est.grid.require_match(truth.grid)
    if est.shape != truth.shape:
        raise DimensionError(f"block shapes differ: {est.shape} vs {truth.shape}")
    diff = BlockKernel(est.blocks - truth.blocks, est.grid)
    return functional_norms(diff, kind)
