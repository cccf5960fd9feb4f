"""Minimal-action bridge between two spectral densities.

The discrete problem minimizes the sum over triangles of
``area * (m^2/rho + (pi^2/3) rho^3)`` subject to the weak continuity equation
``G^T W (rho, m) = b``, where G is the gradient of continuous piecewise-linear
potentials, W the triangle areas and b the difference of the endpoint loads
(top minus bottom boundary). Its exact Fenchel dual is

    max_phi  <phi, b> - sum_T area_T * (2/(3 pi)) (d_t phi + (d_x phi)^2/4)_+^(3/2),

so every iterate carries a primal value, a dual value and a certified gap.
The iteration is the augmented-Lagrangian scheme of dynamic optimal
transport: a space-time Poisson solve for phi, a per-triangle proximal map,
and a multiplier update that converges to the optimal (rho, m).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse.linalg as spla

from ..measures import Grid, GridMeasure, equilibrium_one_matrix, log_energy, moment
from .action import action_density, conjugate_action, prox_action
from .mesh import CrissCrossMesh, SpaceTimeGrid, SpanTooSmallError

__all__ = [
    "BridgeOptions",
    "FlowField",
    "BridgeResult",
    "BridgeNotConverged",
    "solve_bridge",
    "inf_one_matrix_rate",
    "initial_path",
]


class BridgeNotConverged(RuntimeError):
    """Raised when the iteration limit is hit; carries the gap history and last result."""

    def __init__(self, message: str, history: list, result: "BridgeResult | None" = None):
        super().__init__(message)
        self.history = history
        self.result = result


@dataclass
class BridgeOptions:
    tol: float = 1e-3             # relative duality gap and relative feasibility
    max_iter: int = 50_000
    check_every: int = 25
    augmentation: float = 1.0     # augmented-Lagrangian parameter r
    init: str = "linear"          # "linear", "displacement" or "zero"
    raise_on_failure: bool = True
    boundary_tol: float = 1e-6    # max mass allowed in the outermost cells of any slab
    verbose: bool = False


@dataclass
class FlowField:
    """Density and momentum per triangle, arrays of shape (nt, nx, 4)."""

    grid: SpaceTimeGrid
    rho: np.ndarray
    m: np.ndarray

    @property
    def rho_cells(self) -> np.ndarray:
        """Cell averages, shape (nt, nx); row n is the slab-averaged density."""
        return self.rho.mean(axis=2)

    @property
    def m_cells(self) -> np.ndarray:
        return self.m.mean(axis=2)

    @property
    def velocity(self) -> np.ndarray:
        """Per-triangle velocity m/rho, zero where rho vanishes."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.rho > 0, self.m / np.where(self.rho > 0, self.rho, 1.0), 0.0)

    @property
    def velocity_cells(self) -> np.ndarray:
        rc = self.rho_cells
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(rc > 0, self.m_cells / np.where(rc > 0, rc, 1.0), 0.0)

    def slab_mass(self) -> np.ndarray:
        return self.rho_cells.sum(axis=1) * self.grid.dx

    def marginal(self, n: int) -> GridMeasure:
        """Slab-averaged density of slab n as a measure on the cell centers.

        The grid is extended by the two span endpoints carrying zero density.
        """
        g = self.grid
        nodes = np.concatenate([[g.a], g.x_centers, [g.b]])
        dens = np.concatenate([[0.0], self.rho_cells[n], [0.0]])
        return GridMeasure(Grid(nodes), dens)

    def marginal_at(self, t: float) -> GridMeasure:
        """Slab marginals interpolated linearly in time between slab midpoints."""
        g = self.grid
        tc = g.t_centers
        if t <= tc[0]:
            return self.marginal(0)
        if t >= tc[-1]:
            return self.marginal(g.nt - 1)
        n = int(np.searchsorted(tc, t, side="right") - 1)
        w = (t - tc[n]) / (tc[n + 1] - tc[n])
        a, b = self.marginal(n), self.marginal(n + 1)
        return GridMeasure(a.grid, (1 - w) * a.density + w * b.density)


@dataclass
class BridgeResult:
    flow: FlowField
    J: float
    I: float
    action: float               # primal value of the discrete action
    dual: float                 # dual value <phi, b> - F*(grad phi)
    gap: float                  # action - dual
    rel_gap: float
    residual: float             # |G^T W sigma - b| / |b|
    iterations: int
    converged: bool
    beta: float
    sigma0: float
    sigma1: float
    second_moments: tuple[float, float]
    history: list = field(default_factory=list, repr=False)
    phi: np.ndarray | None = field(default=None, repr=False)
    load: np.ndarray | None = field(default=None, repr=False)
    state: dict | None = field(default=None, repr=False)
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "J": self.J, "I": self.I, "action": self.action, "dual": self.dual,
            "gap": self.gap, "rel_gap": self.rel_gap, "iterations": self.iterations,
            "residuals": {"continuity": self.residual},
            "converged": self.converged, "beta": self.beta, "runtime_s": self.runtime,
            "grid": {"a": self.flow.grid.a, "b": self.flow.grid.b,
                     "nx": self.flow.grid.nx, "nt": self.flow.grid.nt},
            "diagnostics": {k: v for k, v in self.diagnostics.items()
                            if isinstance(v, (int, float, str, bool))},
        }


@lru_cache(maxsize=8)
def inf_one_matrix_rate(beta: float) -> float:
    """Minimum over probability measures of nu(x^2)/2 - (beta/2) Sigma(nu), computed numerically."""
    r = np.sqrt(2.0 * beta)
    grid = Grid.uniform(-1.6 * r, 1.6 * r, 401)
    res = equilibrium_one_matrix(beta, lambda x: 0.5 * x * x, grid, fit_support=True,
                                 dpotential=lambda x: x)
    return float(res.energy)


def _primal_value(mesh: CrissCrossMesh, rho: np.ndarray, m: np.ndarray) -> float:
    r = np.clip(rho, 0.0, None)
    mm = np.where(r > 0, m, 0.0)
    return float(mesh.area @ action_density(r, mm))


def _dual_value(mesh: CrissCrossMesh, phi: np.ndarray, load: np.ndarray, g: np.ndarray) -> float:
    nT = mesh.n_tri
    return float(load @ phi - mesh.area @ conjugate_action(g[:nT], g[nT:]))


def initial_path(mesh: CrissCrossMesh, mu0: GridMeasure, mu1: GridMeasure,
                 kind: str) -> tuple[np.ndarray, np.ndarray]:
    """A feasible-looking starting path (rho, m) evaluated at triangle centroids.

    ``linear`` interpolates densities in time, with the flux m = F0 - F1 from
    the distribution functions. ``displacement`` moves mass along the
    monotone coupling of the two laws with constant velocity.
    """
    x, t = mesh.centroid_x, mesh.centroid_t
    if kind == "zero":
        return np.zeros(mesh.n_tri), np.zeros(mesh.n_tri)
    if kind == "linear":
        rho = (1 - t) * mu0.density_at(x) + t * mu1.density_at(x)
        m = mu0.cdf(x) - mu1.cdf(x)
        return rho, m
    if kind == "displacement":
        nq = 4001
        u = (np.arange(nq) + 0.5) / nq
        q0, q1 = mu0.quantile(u), mu1.quantile(u)
        rho = np.zeros(mesh.n_tri)
        m = np.zeros(mesh.n_tri)
        g = mesh.grid
        edges = g.x_nodes
        for tt in np.unique(t):
            sel = t == tt
            z = (1 - tt) * q0 + tt * q1
            hist, _ = np.histogram(z, bins=edges)
            mom, _ = np.histogram(z, bins=edges, weights=q1 - q0)
            cell = np.clip(np.searchsorted(edges, x[sel], side="right") - 1, 0, g.nx - 1)
            rho[sel] = hist[cell] / (nq * g.dx)
            m[sel] = mom[cell] / (nq * g.dx)
        return rho, m
    raise ValueError(f"unknown initialization {kind!r}")


def solve_bridge(mu0: GridMeasure, mu1: GridMeasure, beta: float, grid: SpaceTimeGrid,
                 opts: BridgeOptions | None = None, warm: "BridgeResult | None" = None,
                 mesh: CrissCrossMesh | None = None) -> BridgeResult:
    """Minimize the bridge action between mu0 (t=0) and mu1 (t=1).

    Returns the optimal flow with the rate value
    ``J = (beta/4) (S - (Sigma(mu1) - Sigma(mu0)))`` and the spherical-integral
    limit ``I = -(beta/4) S - (beta/4)(Sigma(mu0) + Sigma(mu1)) + m2(mu0)/2 + m2(mu1)/2 - inf I_beta``,
    where S is the minimal action. ``warm`` reuses the iterates of an earlier
    solve on the same grid.
    """
    opts = opts or BridgeOptions()
    if beta <= 0:
        raise ValueError("beta must be positive")
    t_start = time.perf_counter()
    sig0, sig1 = log_energy(mu0), log_energy(mu1)
    m20, m21 = moment(mu0, 2), moment(mu1, 2)
    mesh = mesh or CrissCrossMesh(grid)
    load = np.zeros(mesh.n_nodes)
    load[mesh.top_nodes] += mesh.endpoint_load(mu1)
    load[mesh.bottom_nodes] -= mesh.endpoint_load(mu0)
    bnorm = np.linalg.norm(load)

    nT = mesh.n_tri
    W2 = np.concatenate([mesh.area, mesh.area])
    G = mesh.gradient
    Div = mesh.divergence
    lap = (Div @ G).tocsc()
    lu = spla.splu(lap[1:, 1:], permc_spec="MMD_AT_PLUS_A")
    r = opts.augmentation

    if warm is not None and warm.state is not None and warm.flow.grid == grid:
        sigma = warm.state["sigma"].copy()
        q = warm.state["q"].copy()
        rho_prev = warm.state["rho_prev"].copy()
    else:
        rho0, m0 = initial_path(mesh, mu0, mu1, opts.init)
        sigma = np.concatenate([rho0, m0])
        q = np.zeros(2 * nT)
        rho_prev = rho0.copy()

    history = []
    phi = np.zeros(mesh.n_nodes)
    g = np.zeros(2 * nT)
    converged = False
    it = 0
    primal = dual = gap = rel_gap = res = np.nan
    for it in range(1, opts.max_iter + 1):
        rhs = (load - Div @ sigma) / r + Div @ q
        phi[1:] = lu.solve(rhs[1:])
        phi[0] = 0.0
        g = G @ phi
        p = g + sigma / r
        pr, pm, _ = prox_action(r * p[:nT], r * p[nT:], r, start=rho_prev)
        rho_prev = pr
        q = p - np.concatenate([pr, pm]) / r
        sigma = sigma + r * (g - q)
        if it % opts.check_every == 0 or it == opts.max_iter:
            primal = _primal_value(mesh, sigma[:nT], sigma[nT:])
            dual = _dual_value(mesh, phi, load, g)
            gap = primal - dual
            rel_gap = abs(gap) / max(abs(primal), 1e-12)
            res = float(np.linalg.norm(Div @ sigma - load) / bnorm)
            history.append({"iter": it, "primal": primal, "dual": dual,
                            "rel_gap": rel_gap, "residual": res})
            if opts.verbose:
                print(f"{it:6d} primal={primal:.10f} dual={dual:.10f} gap={rel_gap:.2e} res={res:.2e}")
            if rel_gap <= opts.tol and res <= opts.tol:
                converged = True
                break

    rho = np.clip(sigma[:nT], 0.0, None)
    m = np.where(rho > 0, sigma[nT:], 0.0)
    flow = FlowField(grid, mesh.to_cells(rho), mesh.to_cells(m))
    edge_mass = float(np.max(flow.rho_cells[:, [0, -1]]) * grid.dx)

    inf_rate = inf_one_matrix_rate(float(beta))
    S = primal
    J = 0.25 * beta * (S - (sig1 - sig0))
    I = -0.25 * beta * S - 0.25 * beta * (sig0 + sig1) + 0.5 * (m20 + m21) - inf_rate
    result = BridgeResult(
        flow=flow, J=float(J), I=float(I), action=float(primal), dual=float(dual),
        gap=float(gap), rel_gap=float(rel_gap), residual=float(res), iterations=it,
        converged=converged, beta=float(beta), sigma0=float(sig0), sigma1=float(sig1),
        second_moments=(float(m20), float(m21)), history=history, phi=phi.copy(),
        load=load, state={"sigma": sigma, "q": q, "rho_prev": rho_prev},
        runtime=time.perf_counter() - t_start,
        diagnostics={"boundary_mass": edge_mass, "inf_rate": inf_rate,
                     "min_slab_mass": float(flow.slab_mass().min()),
                     "max_slab_mass": float(flow.slab_mass().max())},
    )
    if edge_mass > opts.boundary_tol:
        raise SpanTooSmallError(
            f"bridge carries mass {edge_mass:.2e} in the boundary cells; widen the span")
    if not converged and opts.raise_on_failure:
        raise BridgeNotConverged(
            f"no convergence after {it} iterations (relative gap {rel_gap:.2e}, residual {res:.2e})",
            history, result)
    return result
