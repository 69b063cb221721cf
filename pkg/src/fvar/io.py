"""File formats: delimited panels and tables, JSON reports, kernel arrays.

Every writer is deterministic: floats are serialized with repr (shortest
round-trip form), JSON keys are sorted, and no timestamps or machine
details enter the output.  Writers stamp a provenance header (tool
version, seed, configuration hash) so a file can be traced to the exact
invocation that produced it.
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import DataError, UsageError
from .grids import Grid, Panel

_TOOL = "fvar"


def tool_stamp() -> str:
    return f"{_TOOL} {__version__}"


def config_hash(config) -> str:
    """Short stable digest of a configuration mapping."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _provenance_lines(seed, cfg_hash) -> list:
    lines = [f"# tool: {tool_stamp()}"]
    if seed is not None:
        lines.append(f"# seed: {int(seed)}")
    if cfg_hash is not None:
        lines.append(f"# config: {cfg_hash}")
    return lines


def provenance_dict(seed, cfg_hash) -> dict:
    out = {"tool": tool_stamp()}
    if seed is not None:
        out["seed"] = int(seed)
    if cfg_hash is not None:
        out["config"] = cfg_hash
    return out


# ---------------------------------------------------------------------------
# curve panels

def grid_sidecar_path(csv_path) -> Path:
    return Path(str(csv_path) + ".grid.json")


def write_panel_csv(path, panel: Panel, seed=None, cfg_hash=None) -> None:
    """Long-form rows t,j,s,value with 1-based indices, plus a grid sidecar.

    t runs over time points, j over variables, s over grid points.  The
    sidecar JSON next to the file stores the grid as {"points": [...]}.
    """
    path = Path(path)
    n, p, T = panel.values.shape
    buf = _io.StringIO()
    for line in _provenance_lines(seed, cfg_hash):
        buf.write(line + "\n")
    buf.write("t,j,s,value\n")
    vals = panel.values.tolist()
    for t in range(n):
        for j in range(p):
            row = vals[t][j]
            for s in range(T):
                buf.write(f"{t + 1},{j + 1},{s + 1},{row[s]!r}\n")
    path.write_text(buf.getvalue())
    write_grid_json(grid_sidecar_path(path), panel.grid, seed=seed, cfg_hash=cfg_hash)


def write_grid_json(path, grid: Grid, seed=None, cfg_hash=None) -> None:
    obj = {"points": [float(x) for x in grid.points],
           "provenance": provenance_dict(seed, cfg_hash)}
    write_json(path, obj)


def read_grid_json(path) -> Grid:
    obj = read_json(path)
    if "points" not in obj:
        raise DataError(f"{path}: grid file lacks a 'points' array")
    return Grid(np.asarray(obj["points"], dtype=float))


def read_panel_csv(path, grid: Grid | None = None) -> Panel:
    """Read a long-form panel; missing or duplicate cells are data errors.

    The grid comes from the sidecar file when present, from the argument
    otherwise, and falls back to the uniform grid on [0, 1].
    """
    path = Path(path)
    if grid is None:
        sidecar = grid_sidecar_path(path)
        if sidecar.exists():
            grid = read_grid_json(sidecar)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    rows = []
    header_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if [c.strip() for c in line.split(",")] != ["t", "j", "s", "value"]:
                raise DataError(f"{path}:{lineno}: expected header t,j,s,value")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 4:
            raise DataError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
        try:
            rows.append((int(parts[0]), int(parts[1]), int(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not header_seen or not rows:
        raise DataError(f"{path}: no panel rows found")
    arr = np.asarray(rows)
    n = int(arr[:, 0].max())
    p = int(arr[:, 1].max())
    T = int(arr[:, 2].max())
    if arr[:, :3].min() < 1:
        raise DataError(f"{path}: indices must be 1-based positive integers")
    if len(rows) != n * p * T:
        raise DataError(
            f"{path}: got {len(rows)} rows, expected {n * p * T} for a full "
            f"{n}x{p}x{T} panel"
        )
    values = np.full((n, p, T), np.nan)
    values[arr[:, 0].astype(int) - 1,
           arr[:, 1].astype(int) - 1,
           arr[:, 2].astype(int) - 1] = arr[:, 3]
    if np.isnan(values).any():
        raise DataError(f"{path}: duplicate cells leave part of the panel unset")
    if grid is None:
        grid = Grid.uniform(T)
    if grid.size != T:
        raise DataError(f"{path}: panel has {T} grid columns, grid has {grid.size}")
    return Panel(values, grid)


# ---------------------------------------------------------------------------
# generic JSON and tables

def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc


def write_table_csv(path, rows: list, columns: list, seed=None, cfg_hash=None) -> None:
    """Delimited table with a fixed column order and provenance header."""
    buf = _io.StringIO()
    for line in _provenance_lines(seed, cfg_hash):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        out = []
        for col in columns:
            v = row[col] if isinstance(row, dict) else row[columns.index(col)]
            if isinstance(v, float):
                out.append(repr(v))
            else:
                out.append(v)
        writer.writerow(out)
    Path(path).write_text(buf.getvalue())


# ---------------------------------------------------------------------------
# fitted models

def fit_to_dict(fit, seed=None, cfg_hash=None) -> dict:
    """JSON-ready summary of a fitted model.

    Edges are rows [source, target, lag, hs_norm] with 1-based variable
    indices, matching the panel file convention.
    """
    design = fit.design
    return {
        "provenance": provenance_dict(seed, cfg_hash),
        "L": int(fit.L),
        "criterion": fit.criterion,
        "n": int(design.n),
        "p": int(design.p),
        "q": [int(q) for q in design.q_sizes],
        "eta": [float(f.eta) for f in fit.fpca],
        "gamma": [float(g) for g in fit.gammas],
        "df": [float(d) for d in fit.dfs],
        "rss": [float(r) for r in fit.rss],
        "edges": [[int(k) + 1, int(j) + 1, int(h), float(norm)]
                  for (k, j, h, norm) in fit.edges],
        "solver": {
            "iterations": [int(v) for v in fit.diagnostics["iterations"]],
            "restarts": [int(v) for v in fit.diagnostics["restarts"]],
            "final_objective": [float(v) for v in fit.diagnostics["final_obj"]],
            "floored_blocks": [int(v) for v in fit.diagnostics["floored_blocks"]],
        },
    }


def grid_digest(grid: Grid) -> str:
    blob = ",".join(repr(float(x)) for x in grid.points)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def save_kernels(prefix, kernels: list, seed=None, cfg_hash=None) -> tuple:
    """Stacked lag kernels as <prefix>.npy with a JSON descriptor beside it.

    The array has shape (L, p, p, T, T); the descriptor records shapes and
    a digest of the grid so a reader can check compatibility.
    """
    if not kernels:
        raise UsageError("no kernels to save")
    grid = kernels[0].grid
    arr = np.stack([K.blocks for K in kernels])
    npy = Path(str(prefix) + ".npy")
    meta = Path(str(prefix) + ".json")
    np.save(npy, arr)
    write_json(meta, {
        "provenance": provenance_dict(seed, cfg_hash),
        "lags": len(kernels),
        "p": int(arr.shape[1]),
        "grid_size": grid.size,
        "grid_digest": grid_digest(grid),
    })
    return npy, meta


def load_kernels(prefix, grid: Grid):
    from .grids import BlockKernel

    npy = Path(str(prefix) + ".npy")
    meta = read_json(Path(str(prefix) + ".json"))
    try:
        arr = np.load(npy)
    except OSError as exc:
        raise DataError(f"cannot read {npy}: {exc}") from exc
    if meta.get("grid_digest") != grid_digest(grid):
        raise DataError("kernel file was written for a different grid")
    return [BlockKernel(arr[h], grid) for h in range(arr.shape[0])]


def sample_panel_path() -> Path:
    """Path of the small curve panel shipped with the package."""
    return Path(__file__).parent / "data" / "sample_panel.csv"
