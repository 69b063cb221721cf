"""Synthetic curve panels from a finite-rank first-order autoregression.

Curves live in the span of a d-dimensional orthonormal Fourier basis; the
stacked basis coefficients follow theta_t = B theta_{t-1} + eta_t with
standard normal innovations.  The (j, k) block of B is the coefficient
matrix of the lag-1 kernel A_jk(u, v) = s(u)' B_jk s(v), so the functional
model holds exactly and block sparsity of B is block sparsity of A.

Two designs are supported: "sparse" places a fixed number of standard
normal blocks uniformly at random in each block row; "banded" fills the
diagonal band |j - k| <= bandwidth.  B is rescaled so its spectral radius
equals a draw kappa ~ Uniform[0.5, 1], keeping the process stationary but
with varying dependence strength across replicates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UsageError
from .grids import BlockKernel, Grid, Panel
from .rng import STREAM_NOISE, STREAM_SIMULATE, STREAM_TRANSITION, stream
from .stability import spectral_radius, stationary_covariance

DEFAULT_BASIS_DIM = 5
DEFAULT_NOISE_SD = 0.5
DEFAULT_BURN_IN = 200
MODELS = ("sparse", "banded")


def fourier_basis(grid: Grid, dim: int = DEFAULT_BASIS_DIM) -> np.ndarray:
    """Orthonormal Fourier functions on [0, 1], shape (dim, T).

    Ordering: constant, then sine before cosine at each frequency.
    """
    dim = int(dim)
    if dim < 1:
        raise UsageError("basis dimension must be positive")
    u = grid.points
    rows = [np.ones(grid.size)]
    freq = 1
    while len(rows) < dim:
        rows.append(np.sqrt(2.0) * np.sin(2 * np.pi * freq * u))
        if len(rows) < dim:
            rows.append(np.sqrt(2.0) * np.cos(2 * np.pi * freq * u))
        freq += 1
    return np.stack(rows)


@dataclass(frozen=True)
class Transition:
    """Block transition matrix with its support pattern."""

    B: np.ndarray                     # (p*d, p*d)
    support: np.ndarray               # (p, p) bool
    p: int
    d: int
    model: str
    kappa: float | None = None
    seed: int | None = None

    def block(self, j: int, k: int) -> np.ndarray:
        d = self.d
        return self.B[j * d:(j + 1) * d, k * d:(k + 1) * d]

    def kernels(self, grid: Grid, dim_basis: np.ndarray | None = None) -> BlockKernel:
        """Lag-1 kernel blocks evaluated on a grid."""
        S = fourier_basis(grid, self.d) if dim_basis is None else dim_basis
        Bb = self.B.reshape(self.p, self.d, self.p, self.d).transpose(0, 2, 1, 3)
        blocks = np.einsum("ar,jkab,bs->jkrs", S, Bb, S)
        return BlockKernel(blocks, grid)

    def coefficient_covariance(self, sigma2: float = 1.0) -> np.ndarray:
        """Stationary covariance of the stacked coefficients."""
        return stationary_covariance(self.B, sigma2)

    def covariance_kernel(self, grid: Grid, sigma2: float = 1.0) -> BlockKernel:
        """Stationary lag-0 covariance kernel of the curve panel."""
        S = fourier_basis(grid, self.d)
        S0 = self.coefficient_covariance(sigma2)
        Sb = S0.reshape(self.p, self.d, self.p, self.d).transpose(0, 2, 1, 3)
        blocks = np.einsum("ar,jkab,bs->jkrs", S, Sb, S)
        return BlockKernel(blocks, grid)


def gen_transition(model: str, p: int, seed: int, *, row_support: int = 5,
                   bandwidth: int = 2, d: int = DEFAULT_BASIS_DIM,
                   kappa_range: tuple = (0.5, 1.0), rep: int = 0) -> Transition:
    """Draw a random block transition matrix and rescale to radius kappa."""
    if model not in MODELS:
        raise UsageError(f"unknown model {model!r}; expected one of {MODELS}")
    p, d = int(p), int(d)
    if p < 1:
        raise UsageError("p must be positive")
    rng = stream(seed, STREAM_TRANSITION, rep)
    support = np.zeros((p, p), dtype=bool)
    if model == "sparse":
        if row_support < 1 or row_support > p:
            raise UsageError(f"row support {row_support} must lie in [1, p = {p}]")
        for j in range(p):
            cols = rng.choice(p, size=row_support, replace=False)
            support[j, cols] = True
    else:
        if bandwidth < 0:
            raise UsageError("bandwidth must be non-negative")
        idx = np.arange(p)
        support = np.abs(idx[:, None] - idx[None, :]) <= bandwidth
    B = np.zeros((p * d, p * d))
    for j in range(p):
        for k in range(p):
            if support[j, k]:
                B[j * d:(j + 1) * d, k * d:(k + 1) * d] = rng.standard_normal((d, d))
    lo, hi = kappa_range
    if not 0 < lo <= hi < 1 + 1e-12:
        raise UsageError("kappa range must satisfy 0 < lo <= hi <= 1")
    kappa = float(rng.uniform(lo, hi))
    rho = spectral_radius(B)
    if rho == 0.0:
        raise UsageError("drawn transition has zero spectral radius; cannot rescale")
    B *= kappa / rho
    return Transition(B=B, support=support, p=p, d=d, model=model,
                      kappa=kappa, seed=int(seed))


def simulate_panel(transition: Transition, n: int, grid: Grid | None = None,
                   *, noise_sd: float = DEFAULT_NOISE_SD,
                   burn_in: int = DEFAULT_BURN_IN, seed: int | None = None,
                   rep: int = 0) -> tuple[Panel, Panel]:
    """Simulate n curves per variable; returns (observed, latent) panels.

    The observed panel adds independent N(0, noise_sd^2) measurement error
    at every grid point.  The recursion starts from zero and discards
    burn_in steps.
    """
    n = int(n)
    if n < 1:
        raise UsageError("need at least one sample")
    if noise_sd < 0:
        raise UsageError("noise level must be non-negative")
    if burn_in < 0:
        raise UsageError("burn-in must be non-negative")
    if seed is None:
        seed = transition.seed
    if seed is None:
        raise UsageError("a seed is required to simulate")
    grid = grid or Grid.uniform()
    p, d = transition.p, transition.d
    dim = p * d
    rng = stream(seed, STREAM_SIMULATE, rep)
    innov = rng.standard_normal((burn_in + n, dim))
    thetas = np.zeros((n, dim))
    state = np.zeros(dim)
    B = transition.B
    for t in range(burn_in + n):
        state = B @ state + innov[t]
        if t >= burn_in:
            thetas[t - burn_in] = state
    S = fourier_basis(grid, d)
    latent = np.einsum("njd,dt->njt", thetas.reshape(n, p, d), S)
    if noise_sd > 0:
        noise = stream(seed, STREAM_NOISE, rep).standard_normal((n, p, grid.size))
        observed = latent + noise_sd * noise
    else:
        observed = latent.copy()
    return Panel(observed, grid), Panel(latent, grid)
