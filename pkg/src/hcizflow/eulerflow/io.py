"""CSV and JSON serialization of flows and bridge summaries."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .mesh import SpaceTimeGrid
from .solver import BridgeResult, FlowField

__all__ = ["write_flow_csv", "read_flow_csv", "write_summary_json"]


def write_flow_csv(flow: FlowField, path: str | Path) -> None:
    """Long-format CSV ``t,x,rho,m`` of cell averages at slab midpoints."""
    g = flow.grid
    T, X = np.meshgrid(g.t_centers, g.x_centers, indexing="ij")
    rows = np.column_stack([T.ravel(), X.ravel(), flow.rho_cells.ravel(), flow.m_cells.ravel()])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "rho", "m"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])


def read_flow_csv(path: str | Path) -> FlowField:
    """Read a flow written by :func:`write_flow_csv` (cell averages only)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    t = np.unique(data[:, 0])
    x = np.unique(data[:, 1])
    nt, nx = t.size, x.size
    dx = x[1] - x[0]
    grid = SpaceTimeGrid(float(x[0] - 0.5 * dx), float(x[-1] + 0.5 * dx), nx, nt)
    rho = data[:, 2].reshape(nt, nx)
    m = data[:, 3].reshape(nt, nx)
    return FlowField(grid, np.repeat(rho[:, :, None], 4, axis=2), np.repeat(m[:, :, None], 4, axis=2))


def write_summary_json(result: BridgeResult, path: str | Path, extra: dict | None = None) -> dict:
    summary = result.summary()
    if extra:
        summary.update(extra)
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary
