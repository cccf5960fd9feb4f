"""Space-time grids and the criss-cross triangulation used by the bridge solver.

Each rectangular cell [x_i, x_i+1] x [t_n, t_n+1] is split into four triangles
by its two diagonals, meeting at an extra center node. Potentials are
continuous and piecewise linear on the triangles; densities and momenta are
constant per triangle. The triangle order inside a cell is bottom, right,
top, left.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp
from numpy.polynomial.legendre import leggauss

from ..measures import GridMeasure

__all__ = ["SpaceTimeGrid", "CrissCrossMesh", "SpanTooSmallError", "TRIANGLE_KINDS"]

TRIANGLE_KINDS = ("bottom", "right", "top", "left")

# centroids of the four triangles in local cell coordinates (x, t) in [0,1]^2
_CENTROIDS = np.array([[0.5, 1 / 6], [5 / 6, 0.5], [0.5, 5 / 6], [1 / 6, 0.5]])


class SpanTooSmallError(ValueError):
    """Raised when mass reaches the boundary cells of the spatial span."""


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform grid on [a, b] x [0, 1] with ``nx`` cells in space and ``nt`` slabs in time."""

    a: float
    b: float
    nx: int
    nt: int

    def __post_init__(self):
        if not self.b > self.a:
            raise ValueError("span must satisfy a < b")
        if self.nx < 4 or self.nt < 2:
            raise ValueError("need nx >= 4 cells and nt >= 2 slabs")

    @classmethod
    def around(cls, lo: float, hi: float, nx: int, nt: int, pad: float = 1.5) -> "SpaceTimeGrid":
        """Span [lo - pad, hi + pad], wide enough for the bridge to spread."""
        return cls(lo - pad, hi + pad, nx, nt)

    @property
    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.a, self.b, self.nx + 1)

    @property
    def t_nodes(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.nt + 1)

    @property
    def dx(self) -> float:
        return (self.b - self.a) / self.nx

    @property
    def dt(self) -> float:
        return 1.0 / self.nt

    @property
    def x_centers(self) -> np.ndarray:
        x = self.x_nodes
        return 0.5 * (x[:-1] + x[1:])

    @property
    def t_centers(self) -> np.ndarray:
        t = self.t_nodes
        return 0.5 * (t[:-1] + t[1:])

    def shifted(self, c: float) -> "SpaceTimeGrid":
        return SpaceTimeGrid(self.a + c, self.b + c, self.nx, self.nt)

    def refined(self, factor: int = 2) -> "SpaceTimeGrid":
        return SpaceTimeGrid(self.a, self.b, self.nx * factor, self.nt * factor)


class CrissCrossMesh:
    """Geometry and gradient operator of the criss-cross triangulation."""

    def __init__(self, grid: SpaceTimeGrid):
        self.grid = grid
        nx, nt = grid.nx, grid.nt
        x, t = grid.x_nodes, grid.t_nodes
        dx, dt = grid.dx, grid.dt
        self.n_corner = (nt + 1) * (nx + 1)
        self.n_cells = nt * nx
        self.n_nodes = self.n_corner + self.n_cells
        self.n_tri = 4 * self.n_cells

        n, i = np.meshgrid(np.arange(nt), np.arange(nx), indexing="ij")
        n, i = n.ravel(), i.ravel()
        c00 = n * (nx + 1) + i
        c01 = c00 + 1
        c10 = c00 + nx + 1
        c11 = c10 + 1
        ctr = self.n_corner + n * nx + i
        # triangle index = kind * n_cells + cell
        tris = np.concatenate([
            np.stack([c00, c01, ctr], 1),
            np.stack([c01, c11, ctr], 1),
            np.stack([c11, c10, ctr], 1),
            np.stack([c10, c00, ctr], 1),
        ])
        self.triangles = tris
        self.node_x = np.concatenate([np.tile(x, nt + 1), x[i] + 0.5 * dx])
        self.node_t = np.concatenate([np.repeat(t, nx + 1), t[n] + 0.5 * dt])
        self.area = np.full(self.n_tri, 0.25 * dx * dt)

        # barycentric gradients from the inverse of the edge matrix
        px = self.node_x[tris]
        pt = self.node_t[tris]
        e1 = np.stack([px[:, 1] - px[:, 0], pt[:, 1] - pt[:, 0]], 1)
        e2 = np.stack([px[:, 2] - px[:, 0], pt[:, 2] - pt[:, 0]], 1)
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        g1 = np.stack([e2[:, 1], -e2[:, 0]], 1) / det[:, None]
        g2 = np.stack([-e1[:, 1], e1[:, 0]], 1) / det[:, None]
        g0 = -g1 - g2
        grads = np.stack([g0, g1, g2], 1)  # (n_tri, 3, [x, t])
        rows = np.repeat(np.arange(self.n_tri), 3)
        cols = tris.ravel()
        self.grad_t = sp.csr_matrix((grads[:, :, 1].ravel(), (rows, cols)),
                                    shape=(self.n_tri, self.n_nodes))
        self.grad_x = sp.csr_matrix((grads[:, :, 0].ravel(), (rows, cols)),
                                    shape=(self.n_tri, self.n_nodes))
        self.bottom_nodes = np.arange(nx + 1)
        self.top_nodes = nt * (nx + 1) + np.arange(nx + 1)

        loc = _CENTROIDS
        self.centroid_x = np.concatenate([x[i] + loc[k, 0] * dx for k in range(4)])
        self.centroid_t = np.concatenate([t[n] + loc[k, 1] * dt for k in range(4)])

    @cached_property
    def gradient(self) -> sp.csr_matrix:
        """Stacked operator phi -> (d_t phi, d_x phi) per triangle."""
        return sp.vstack([self.grad_t, self.grad_x]).tocsr()

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        """Weighted adjoint: sigma -> G^T W sigma, the weak space-time divergence."""
        w = np.concatenate([self.area, self.area])
        return (self.gradient.T @ sp.diags(w)).tocsr()

    def to_cells(self, values: np.ndarray) -> np.ndarray:
        """Reshape a per-triangle array to (nt, nx, 4)."""
        g = self.grid
        return values.reshape(4, g.nt, g.nx).transpose(1, 2, 0)

    def from_cells(self, values: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(values.transpose(2, 0, 1)).ravel()

    def endpoint_load(self, mu: GridMeasure, tol: float = 1e-10) -> np.ndarray:
        """Integrals of the density of mu against the hat functions of the x grid.

        The integrand is a product of two piecewise-linear functions on the
        union of both node sets, so a three-point Gauss rule is exact.
        """
        xg = self.grid.x_nodes
        y = mu.nodes
        inside = (y > xg[0]) & (y < xg[-1])
        outside_mass = mu.cdf(xg[0]) + (1.0 - mu.cdf(xg[-1]))
        if outside_mass > tol:
            raise SpanTooSmallError(f"endpoint has mass {outside_mass:.2e} outside the span")
        z = np.union1d(xg, y[inside])
        s, ws = leggauss(3)
        s = 0.5 * (s + 1)
        ws = 0.5 * ws
        h = np.diff(z)
        pts = (z[:-1, None] + h[:, None] * s[None, :]).ravel()
        wts = (h[:, None] * ws[None, :]).ravel()
        vals = mu.density_at(pts) * wts
        j = np.clip(np.searchsorted(xg, pts, side="right") - 1, 0, xg.size - 2)
        loc = (pts - xg[j]) / self.grid.dx
        load = np.zeros(xg.size)
        np.add.at(load, j, vals * (1 - loc))
        np.add.at(load, j + 1, vals * loc)
        if load[0] + load[-1] > tol or load[1] + load[-2] > 1e3 * tol:
            raise SpanTooSmallError("endpoint mass reaches the boundary cells; widen the span")
        return load / load.sum()
