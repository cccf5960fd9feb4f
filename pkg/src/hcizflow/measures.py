"""Probability densities on one-dimensional grids and their logarithmic functionals.

A :class:`GridMeasure` stores node values of a density; between nodes the
density is the linear interpolant and it vanishes outside the grid span.
Every functional in this module (mass, moments, Hilbert transform,
logarithmic potential, logarithmic energy) is computed for that interpolant,
exactly or with high-order Gauss rules, so results are consistent with each
other and refine at second order for smooth densities.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import xlogy

__all__ = [
    "Grid",
    "GridMeasure",
    "AtomicMeasureError",
    "EquilibriumResult",
    "semicircle",
    "tricomi_defect",
    "from_function",
    "hilbert_transform",
    "log_potential",
    "log_energy",
    "moment",
    "one_matrix_energy",
    "log_kernel_matrix",
    "load_vector",
    "minimize_log_gas",
    "equilibrium_one_matrix",
    "one_cut_edges",
    "wasserstein1",
    "l1_distance",
    "semicircle_log_energy",
    "moments",
    "Polynomial",
    "write_measure_csv",
    "read_measure_csv",
]

_CHUNK = 512


class AtomicMeasureError(ValueError):
    """Raised when a measure is concentrated on a single node (log energy is -inf)."""


@dataclass(frozen=True)
class Grid:
    """Strictly increasing nodes carrying a piecewise-linear density."""

    nodes: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.nodes, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise ValueError("a grid needs at least three nodes")
        if not np.all(np.isfinite(x)):
            raise ValueError("grid nodes must be finite")
        if np.any(np.diff(x) <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Grid":
        return cls(np.linspace(a, b, n))

    @classmethod
    def clustered(cls, a: float, b: float, n: int) -> "Grid":
        """Cosine-spaced nodes, dense near both ends.

        Square-root edges of a density supported on exactly [a, b] are
        resolved at second order on such grids.
        """
        theta = np.linspace(np.pi, 0.0, n)
        return cls(0.5 * (a + b) + 0.5 * (b - a) * np.cos(theta))

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def span(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.nodes)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid weights; they integrate the linear interpolant exactly."""
        h = self.widths
        w = np.zeros(self.n)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w

    def gauss_points(self, order: int = 8) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Gauss-Legendre points inside every cell.

        Returns ``(points, weights, cell_index, local_coordinate)`` flattened
        cell by cell; the local coordinate runs from 0 to 1 across a cell.
        """
        s, ws = leggauss(order)
        s = 0.5 * (s + 1.0)
        ws = 0.5 * ws
        h = self.widths
        pts = self.nodes[:-1, None] + h[:, None] * s[None, :]
        wts = h[:, None] * ws[None, :]
        cell = np.repeat(np.arange(self.n - 1), order)
        loc = np.tile(s, self.n - 1)
        return pts.ravel(), wts.ravel(), cell, loc


@dataclass(frozen=True)
class GridMeasure:
    """A probability density sampled at grid nodes."""

    grid: Grid
    density: np.ndarray
    normalize: bool = field(default=True, repr=False)

    def __post_init__(self):
        rho = np.array(self.density, dtype=float)
        if rho.shape != (self.grid.n,):
            raise ValueError("density must have one value per grid node")
        if not np.all(np.isfinite(rho)):
            raise ValueError("density must be finite")
        scale = max(np.max(np.abs(rho)), 1e-300)
        if np.min(rho) < -1e-10 * scale:
            raise ValueError("density must be nonnegative")
        rho = np.clip(rho, 0.0, None)
        mass = float(self.grid.weights @ rho)
        if mass <= 0:
            raise ValueError("density has zero mass")
        if self.normalize:
            rho = rho / mass
        rho.setflags(write=False)
        object.__setattr__(self, "density", rho)
        object.__setattr__(self, "normalize", False)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    @property
    def mass(self) -> float:
        return float(self.grid.weights @ self.density)

    @property
    def mean(self) -> float:
        return moment(self, 1)

    @property
    def variance(self) -> float:
        m1 = moment(self, 1)
        return moment(self, 2) - m1 * m1

    def support(self, threshold: float = 0.0) -> tuple[float, float]:
        """Smallest node interval outside of which the density is <= threshold."""
        idx = np.flatnonzero(self.density > threshold * np.max(self.density))
        lo = max(idx[0] - 1, 0)
        hi = min(idx[-1] + 1, self.grid.n - 1)
        return float(self.nodes[lo]), float(self.nodes[hi])

    def density_at(self, x) -> np.ndarray:
        return np.interp(x, self.nodes, self.density, left=0.0, right=0.0)

    def cdf_nodes(self) -> np.ndarray:
        h = self.grid.widths
        inc = 0.5 * h * (self.density[:-1] + self.density[1:])
        return np.concatenate([[0.0], np.cumsum(inc)])

    def cdf(self, x) -> np.ndarray:
        """Exact distribution function of the piecewise-linear density."""
        x = np.asarray(x, dtype=float)
        y, rho = self.nodes, self.density
        F = self.cdf_nodes()
        j = np.clip(np.searchsorted(y, x, side="right") - 1, 0, y.size - 2)
        dx = np.clip(x - y[j], 0.0, y[j + 1] - y[j])
        slope = (rho[j + 1] - rho[j]) / (y[j + 1] - y[j])
        out = F[j] + rho[j] * dx + 0.5 * slope * dx * dx
        return np.where(x <= y[0], 0.0, np.where(x >= y[-1], F[-1], out))

    def quantile(self, u) -> np.ndarray:
        """Inverse of :meth:`cdf`, solving the quadratic inside each cell."""
        u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
        y, rho = self.nodes, self.density
        F = self.cdf_nodes()
        j = np.clip(np.searchsorted(F, u, side="right") - 1, 0, y.size - 2)
        h = y[j + 1] - y[j]
        a = 0.5 * (rho[j + 1] - rho[j]) / h
        b = rho[j]
        c = F[j] - u
        # root of a*dx^2 + b*dx + c = 0 in [0, h], written stably
        disc = np.sqrt(np.maximum(b * b - 4 * a * c, 0.0))
        denom = b + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            dx = np.where(denom > 0, -2 * c / denom, 0.0)
        return y[j] + np.clip(dx, 0.0, h)

    def affine(self, scale: float, shift: float = 0.0) -> "GridMeasure":
        """Law of ``scale * X + shift`` for X with this law (scale > 0)."""
        if scale <= 0:
            raise ValueError("scale must be positive")
        return GridMeasure(Grid(scale * self.nodes + shift), self.density / scale)

    def on_grid(self, grid: Grid) -> "GridMeasure":
        """Interpolate onto another grid and renormalize."""
        return GridMeasure(grid, self.density_at(grid.nodes))


def semicircle(variance: float = 1.0, center: float = 0.0, grid: Grid | None = None,
               n: int = 801) -> GridMeasure:
    """Wigner semicircle law with the given variance.

    Without a grid, a clustered grid fitted exactly to the support is used.
    """
    if variance <= 0:
        raise ValueError("variance must be positive")
    r = 2.0 * np.sqrt(variance)
    if grid is None:
        grid = Grid.clustered(center - r, center + r, n)
    z = grid.nodes - center
    rho = np.sqrt(np.clip(r * r - z * z, 0.0, None)) / (2 * np.pi * variance)
    return GridMeasure(grid, rho)


def write_measure_csv(mu: GridMeasure, path) -> None:
    """Write ``x,density`` rows; ``repr`` floats round-trip exactly."""
    lines = ["x,density"] + [f"{float(x)!r},{float(r)!r}" for x, r in zip(mu.nodes, mu.density)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_measure_csv(path, normalize: bool = True) -> GridMeasure:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns x,density")
    return GridMeasure(Grid(data[:, 0]), data[:, 1], normalize=normalize)


def from_function(f: Callable[[np.ndarray], np.ndarray], grid: Grid) -> GridMeasure:
    return GridMeasure(grid, np.asarray(f(grid.nodes), dtype=float))


def semicircle_log_energy(variance: float) -> float:
    """Closed-form logarithmic energy of a semicircle law."""
    return 0.5 * np.log(variance) - 0.25


def _segments(mu: GridMeasure):
    y = mu.nodes
    rho = mu.density
    h = np.diff(y)
    s = np.diff(rho) / h
    return y, rho, h, s


def _check_not_atomic(mu: GridMeasure) -> None:
    w = mu.grid.weights * mu.density
    k = int(np.argmax(w))
    nb = np.concatenate([mu.density[max(k - 1, 0):k], mu.density[k + 1:k + 2]])
    if w[k] > 0.5 and np.all(nb < 1e-12):
        raise AtomicMeasureError("measure is concentrated on a single node; log energy is -inf")


def hilbert_transform(mu: GridMeasure, x=None) -> np.ndarray:
    """Principal value of the integral of rho(y)/(x-y).

    The sum regroups the exact cell integrals node by node so that the
    logarithmic singularities of neighbouring cells cancel in closed form.
    """
    y, rho, h, s = _segments(mu)
    x = mu.nodes if x is None else np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    n = y.size
    ds = np.zeros(n)
    ds[1:-1] = s[1:] - s[:-1]
    ds[0] = s[0]
    ds[-1] = -s[-1]
    const = -(rho[-1] - rho[0])
    out = np.empty(x.size)
    for a in range(0, x.size, _CHUNK):
        xc = x[a:a + _CHUNK, None]
        d = xc - y[None, :]
        coef = ds[None, :] * d
        coef[:, 0] += rho[0]
        coef[:, -1] -= rho[-1]
        out[a:a + _CHUNK] = xlogy(coef, np.abs(d)).sum(axis=1) + const
    return out[0] if scalar else out


def _F0(w):
    return xlogy(w, np.abs(w)) - w


def _F1(w):
    return 0.5 * xlogy(w * w, np.abs(w)) - 0.25 * w * w


def log_potential(mu: GridMeasure, x=None) -> np.ndarray:
    """Logarithmic potential U(x) = integral of log|x-y| against mu, cell-exact."""
    y, rho, h, s = _segments(mu)
    x = mu.nodes if x is None else np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    out = np.empty(x.size)
    for a in range(0, x.size, _CHUNK):
        xc = x[a:a + _CHUNK, None]
        wl = y[None, :-1] - xc
        wr = y[None, 1:] - xc
        c = rho[None, :-1] + s[None, :] * (xc - y[None, :-1])
        val = c * (_F0(wr) - _F0(wl)) + s[None, :] * (_F1(wr) - _F1(wl))
        out[a:a + _CHUNK] = val.sum(axis=1)
    return out[0] if scalar else out


def log_energy(mu: GridMeasure, order: int = 8) -> float:
    """Logarithmic energy: double integral of log|x-y| against mu twice."""
    _check_not_atomic(mu)
    pts, wts, _, _ = mu.grid.gauss_points(order)
    U = log_potential(mu, pts)
    return float(np.sum(wts * mu.density_at(pts) * U))


def tricomi_defect(mu: GridMeasure, order: int = 6) -> float:
    """Signed defect of the identity int (H rho)^2 rho = (pi^2/3) int rho^3.

    Both sides are integrated cell by cell with Gauss points, the Hilbert
    transform being exact for the piecewise-linear density.
    """
    pts, wts, _, _ = mu.grid.gauss_points(order)
    rho = mu.density_at(pts)
    H = hilbert_transform(mu, pts)
    return float(np.sum(wts * rho * H * H) - np.pi ** 2 / 3.0 * np.sum(wts * rho ** 3))


def moment(mu: GridMeasure, p: int) -> float:
    """Exact p-th moment of the piecewise-linear density."""
    order = max(2, (p + 3) // 2)
    pts, wts, _, _ = mu.grid.gauss_points(order)
    return float(np.sum(wts * mu.density_at(pts) * pts ** p))


def moments(mu: GridMeasure, max_p: int) -> np.ndarray:
    """Moments of orders 0..max_p."""
    if max_p < 0:
        raise ValueError("max_p must be nonnegative")
    return np.array([moment(mu, p) for p in range(max_p + 1)])


def one_matrix_energy(mu: GridMeasure, beta: float,
                      potential: Callable[[np.ndarray], np.ndarray] | None = None) -> float:
    """Energy of a one-matrix log gas; the default potential is x^2/2."""
    if potential is None:
        lin = 0.5 * moment(mu, 2)
    else:
        pts, wts, _, _ = mu.grid.gauss_points(8)
        lin = float(np.sum(wts * mu.density_at(pts) * potential(pts)))
    return lin - 0.5 * beta * log_energy(mu)


def log_kernel_matrix(grid: Grid, order: int = 8) -> np.ndarray:
    """Galerkin matrix of the logarithmic kernel between hat functions.

    ``rho @ K @ rho`` equals :func:`log_energy` of the interpolated density.
    The inner integral over each cell is exact; the outer one uses Gauss
    points, and the result is symmetrized.
    """
    y = grid.nodes
    n = y.size
    h = np.diff(y)
    s, ws = leggauss(order)
    s = 0.5 * (s + 1.0)
    ws = 0.5 * ws
    K = np.zeros((n, n))
    step = max(1, 4096 // order)
    for c0 in range(0, n - 1, step):
        c1 = min(c0 + step, n - 1)
        pts = (y[c0:c1, None] + h[c0:c1, None] * s[None, :]).ravel()
        wl = y[None, :-1] - pts[:, None]
        wr = y[None, 1:] - pts[:, None]
        i0 = _F0(wr) - _F0(wl)
        i1 = (_F1(wr) - _F1(wl) - wl * i0) / h[None, :]
        U = np.zeros((pts.size, n))
        U[:, :-1] += i0 - i1
        U[:, 1:] += i1
        U = U.reshape(c1 - c0, order, n)
        wq = h[c0:c1, None] * ws[None, :]
        K[c0:c1] += np.einsum("cq,cqn->cn", wq * (1.0 - s[None, :]), U)
        K[c0 + 1:c1 + 1] += np.einsum("cq,cqn->cn", wq * s[None, :], U)
    return 0.5 * (K + K.T)


def load_vector(grid: Grid, potential: Callable[[np.ndarray], np.ndarray],
                order: int = 8) -> np.ndarray:
    """Integrals of the potential against every hat function."""
    pts, wts, cell, loc = grid.gauss_points(order)
    v = potential(pts) * wts
    g = np.zeros(grid.n)
    np.add.at(g, cell, v * (1.0 - loc))
    np.add.at(g, cell + 1, v * loc)
    return g


@dataclass
class EquilibriumResult:
    measure: GridMeasure
    energy: float
    multiplier: float
    residual: float
    iterations: int
    support_nodes: np.ndarray


def minimize_log_gas(linear: np.ndarray, repulsion: float, K: np.ndarray, w: np.ndarray,
                     start: np.ndarray | None = None, max_iter: int = 500,
                     tol: float = 1e-12) -> tuple[np.ndarray, float, int, float]:
    """Minimize ``linear @ r - repulsion * r @ K @ r`` over densities r >= 0 with ``w @ r = 1``.

    Primal active-set method: the KKT system is solved exactly on the
    current support, nodes with negative density are dropped and nodes with
    negative reduced gradient are added. For ``repulsion > 0`` the problem
    is strictly convex on the simplex because the logarithmic kernel is
    negative definite on zero-mass signed measures.

    Returns ``(r, multiplier, iterations, kkt_residual)``.
    """
    n = linear.size
    if start is None:
        S = np.zeros(n, dtype=bool)
        S[1:-1] = True
    else:
        S = start > 0
        S[[0, -1]] = False
    if repulsion <= 0:
        raise ValueError("repulsion must be positive for the log-gas problem")
    scale = np.max(np.abs(linear)) + 1.0
    it = 0
    r = np.zeros(n)
    lam = 0.0
    seen: set[bytes] = set()
    for it in range(1, max_iter + 1):
        idx = np.flatnonzero(S)
        m = idx.size
        A = np.zeros((m + 1, m + 1))
        A[:m, :m] = -2.0 * repulsion * K[np.ix_(idx, idx)]
        A[:m, m] = -w[idx]
        A[m, :m] = w[idx]
        rhs = np.concatenate([-linear[idx], [1.0]])
        sol = np.linalg.solve(A, rhs)
        rS, lam = sol[:m], sol[m]
        if np.min(rS) < -tol * np.max(np.abs(rS)):
            neg = rS < 0
            S[idx[neg]] = False
            continue
        r = np.zeros(n)
        r[idx] = np.clip(rS, 0.0, None)
        grad = linear - 2.0 * repulsion * (K @ r) - lam * w
        red = grad / np.maximum(w, 1e-300)
        outside = ~S
        outside[[0, -1]] = False
        viol = outside & (red < -tol * scale)
        key = S.tobytes()
        if not np.any(viol) or key in seen:
            break
        seen.add(key)
        S[viol] = True
    grad = linear - 2.0 * repulsion * (K @ r) - lam * w
    red = grad / np.maximum(w, 1e-300)
    kkt = float(max(np.max(np.abs(red[r > 0])) if np.any(r > 0) else 0.0,
                    -min(0.0, float(np.min(red[1:-1])))))
    return r, float(lam), it, kkt


def one_cut_edges(beta: float, dpotential: Callable[[np.ndarray], np.ndarray],
                  guess: tuple[float, float], n_theta: int = 512) -> tuple[float, float]:
    """Support edges of a single-interval equilibrium measure.

    Solves the two classical edge conditions written in the angle variable
    x = c + r cos(theta): the mean of V'(x) vanishes and the mean of
    (x - c) V'(x) equals beta.
    """
    from scipy.optimize import fsolve

    theta = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    cos = np.cos(theta)

    def eqs(z):
        c, r = z[0], abs(z[1])
        dv = dpotential(c + r * cos)
        return [np.mean(dv), np.mean(r * cos * dv) - beta]

    c0 = 0.5 * (guess[0] + guess[1])
    r0 = 0.5 * (guess[1] - guess[0])
    sol, info, ier, msg = fsolve(eqs, [c0, r0], full_output=True, xtol=1e-14)
    if np.max(np.abs(eqs(sol))) > 1e-8:
        raise ValueError(f"edge equations did not converge: {msg}")
    c, r = sol[0], abs(sol[1])
    return c - r, c + r


def equilibrium_one_matrix(beta: float, potential: Callable[[np.ndarray], np.ndarray],
                           grid: Grid, K: np.ndarray | None = None,
                           fit_support: bool = False,
                           dpotential: Callable[[np.ndarray], np.ndarray] | None = None
                           ) -> EquilibriumResult:
    """Minimizer of ``nu(V) - (beta/2) Sigma(nu)`` over densities on the grid.

    With ``fit_support=True`` and a single-interval support, the edges are
    located from the edge conditions (``dpotential`` is V', estimated by
    central differences when omitted) and the problem is solved again on a
    cosine-clustered grid with the same node count ending exactly at the
    edges. This resolves the square-root edges far better than a uniform grid.
    """
    if beta <= 0:
        raise ValueError("beta must be positive")
    if K is None:
        K = log_kernel_matrix(grid)
    g = load_vector(grid, potential)
    w = grid.weights
    r, lam, it, kkt = minimize_log_gas(g, 0.5 * beta, K, w)
    if r[1] > 1e-10 * r.max() or r[-2] > 1e-10 * r.max():
        raise ValueError("equilibrium support reaches the grid boundary; widen the grid")
    if fit_support:
        pos = np.flatnonzero(r > 0)
        if np.all(np.diff(pos) == 1):
            if dpotential is None:
                def dpotential(x, _h=1e-5):
                    return (potential(x + _h) - potential(x - _h)) / (2 * _h)
            lo, hi = one_cut_edges(beta, dpotential,
                                   (grid.nodes[pos[0] - 1], grid.nodes[pos[-1] + 1]))
            grid = Grid.clustered(lo, hi, grid.n)
            K = log_kernel_matrix(grid)
            g = load_vector(grid, potential)
            w = grid.weights
            r, lam, it2, kkt = minimize_log_gas(g, 0.5 * beta, K, w)
            it += it2
    mu = GridMeasure(grid, r)
    energy = float(g @ mu.density - 0.5 * beta * mu.density @ K @ mu.density)
    return EquilibriumResult(mu, energy, lam, kkt, it, np.flatnonzero(r > 0))


def _cdf_on_union(mu: GridMeasure, nu: GridMeasure):
    z = np.union1d(mu.nodes, nu.nodes)
    return z, mu.cdf(z), nu.cdf(z)


def wasserstein1(mu: GridMeasure, nu: GridMeasure, n: int = 4001) -> float:
    """Wasserstein-1 distance, the L1 distance between distribution functions."""
    a = min(mu.nodes[0], nu.nodes[0])
    b = max(mu.nodes[-1], nu.nodes[-1])
    z = np.union1d(np.linspace(a, b, n), np.union1d(mu.nodes, nu.nodes))
    d = np.abs(mu.cdf(z) - nu.cdf(z))
    return float(np.trapezoid(d, z))


def l1_distance(mu: GridMeasure, nu: GridMeasure, n: int = 8001) -> float:
    """L1 distance between the two interpolated densities."""
    a = min(mu.nodes[0], nu.nodes[0])
    b = max(mu.nodes[-1], nu.nodes[-1])
    z = np.union1d(np.linspace(a, b, n), np.union1d(mu.nodes, nu.nodes))
    return float(np.trapezoid(np.abs(mu.density_at(z) - nu.density_at(z)), z))


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial with ascending coefficients, used as a confining potential."""

    coeffs: tuple

    def __post_init__(self):
        c = np.trim_zeros(np.asarray(self.coeffs, dtype=float), "b")
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(float(v) for v in c))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def leading(self) -> float:
        return self.coeffs[-1]

    @property
    def even_degree(self) -> int:
        return 2 * (self.degree // 2)

    def __call__(self, x):
        return np.polynomial.polynomial.polyval(x, self.coeffs)

    def derivative(self) -> "Polynomial":
        d = np.polynomial.polynomial.polyder(self.coeffs)
        return Polynomial(tuple(d) if d.size else (0.0,))

    def is_confining(self) -> bool:
        return self.degree >= 2 and self.degree % 2 == 0 and self.leading > 0

    def has_quartic_growth(self) -> bool:
        """True when P(x) >= c x^4 + d for some c > 0."""
        return self.degree >= 4 and self.is_confining()

    def plus(self, other: "Polynomial", scale: float = 1.0) -> "Polynomial":
        """``self + scale * other``."""
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += scale * np.asarray(other.coeffs)
        return Polynomial(tuple(a))
