"""Shared fixtures and small data factories."""

import numpy as np
import pytest

from fvar.grids import Grid, Panel

# one line per acceptance criterion, echoed after the run so the verdicts
# survive pytest's output capture
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def grid():
    return Grid.uniform(50)


@pytest.fixture
def fine_grid():
    return Grid.uniform(501)


def smooth_panel(n: int, p: int, grid: Grid, seed: int = 0,
                 rank: int = 3, noise_sd: float = 0.0) -> Panel:
    """Low-rank panel built from polynomial curves, optionally noisy."""
    rng = np.random.default_rng(seed)
    u = grid.points
    shapes = np.stack([np.ones_like(u), u - 0.5, (u - 0.5) ** 2,
                       np.sin(2 * np.pi * u), np.cos(2 * np.pi * u)])[:rank]
    coef = rng.standard_normal((n, p, rank))
    values = np.einsum("npr,rt->npt", coef, shapes)
    if noise_sd > 0:
        values = values + noise_sd * rng.standard_normal(values.shape)
    return Panel(values, grid)
