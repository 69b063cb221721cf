"""Sparse functional autoregression for high-dimensional panels of curves.

The package covers the full pipeline: quadrature-backed function-space
primitives, autocovariance estimation, a frequency-domain stability measure,
penalized functional PCA, a group-sparse functional autoregressive fit with
network Granger causality read-out, synthetic data generation, and a study
harness with a command line front end.
"""

__version__ = "0.1.0"

from .errors import DataError, DimensionError, FvarError, NumericalError, UsageError
from .grids import (
    BlockKernel,
    Grid,
    block_matrix_norms,
    functional_norms,
    hs_norm,
    inner_product,
    kernel_apply,
)

__all__ = [
    "__version__",
    "FvarError",
    "UsageError",
    "DataError",
    "DimensionError",
    "NumericalError",
    "Grid",
    "BlockKernel",
    "inner_product",
    "kernel_apply",
    "hs_norm",
    "functional_norms",
    "block_matrix_norms",
]
