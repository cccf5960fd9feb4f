"""A-posteriori checks on computed bridges: duality certificate, weak Euler
residuals and transport of u + i pi rho along complex characteristics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy.optimize import minimize

from .action import PI2, action_density, conjugate_action, fenchel_young_parts
from .mesh import CrissCrossMesh
from .solver import BridgeResult, FlowField

__all__ = [
    "DualPotential",
    "Certificate",
    "dual_certificate",
    "BumpFamily",
    "EulerReport",
    "euler_residual",
    "CharacteristicsReport",
    "characteristics_check",
]


@dataclass
class DualPotential:
    phi: np.ndarray          # values at mesh nodes (corners first, then cell centers)
    dual_value: float
    hj_min_support: float    # min of d_t phi + (d_x phi)^2/4 over triangles carrying mass
    hj_min: float            # same over all triangles


@dataclass
class Certificate:
    potential: DualPotential
    primal: float
    gap: float
    velocity_error: float    # integral of rho (u - d_x phi / 2)^2
    density_error: float     # (pi^2/3) integral of (rho - r)^2 (rho + 2 r)
    hj_error: float          # integral of rho * max(-(d_t phi + (d_x phi)^2/4), 0)
    load_gap: float | None   # action - (<phi, b> - F*(grad phi)) when the load is known


def _flow_vectors(mesh: CrissCrossMesh, flow: FlowField):
    return mesh.from_cells(flow.rho), mesh.from_cells(flow.m)


def _flow_dual(mesh, rho, m, phi):
    g = mesh.gradient @ phi
    nT = mesh.n_tri
    a, b = g[:nT], g[nT:]
    val = float(mesh.area @ (a * rho + b * m - conjugate_action(a, b)))
    return val, a, b


def dual_certificate(flow: FlowField, phi: np.ndarray | None = None,
                     load: np.ndarray | None = None, ascent_iter: int = 0,
                     result: BridgeResult | None = None) -> Certificate:
    """Certify a flow with a dual potential.

    The dual value is ``sum_T area (d_t phi rho + d_x phi m - f*(grad phi))``;
    by the Fenchel-Young inequality per triangle the gap to the primal
    action is nonnegative and splits exactly into a velocity error, a density
    error and a Hamilton-Jacobi violation term. Without ``phi`` (and without a
    ``result`` supplying one) the potential is obtained by dual ascent from
    zero with L-BFGS; ``ascent_iter`` > 0 additionally polishes a given phi.
    """
    mesh = CrissCrossMesh(flow.grid)
    rho, m = _flow_vectors(mesh, flow)
    if result is not None:
        phi = result.phi if phi is None else phi
        load = result.load if load is None else load
    primal = float(mesh.area @ action_density(rho, m))
    if phi is None:
        phi = np.zeros(mesh.n_nodes)
        ascent_iter = max(ascent_iter, 5000)
    phi = np.asarray(phi, dtype=float)
    if ascent_iter > 0:
        G = mesh.gradient
        nT = mesh.n_tri
        area = mesh.area

        def neg(p):
            full = np.concatenate([[0.0], p])
            g = G @ full
            a, b = g[:nT], g[nT:]
            A = np.clip(a + 0.25 * b * b, 0.0, None)
            val = area @ (a * rho + b * m - 2.0 / (3 * np.pi) * A ** 1.5)
            ra = area * (rho - np.sqrt(A) / np.pi)
            rb = area * (m - 0.5 * b * np.sqrt(A) / np.pi)
            grad = G.T @ np.concatenate([ra, rb])
            return -val, -grad[1:]

        res = minimize(neg, phi[1:] - phi[0], jac=True, method="L-BFGS-B",
                       options={"maxiter": ascent_iter, "maxcor": 30, "gtol": 1e-14, "ftol": 1e-16})
        phi = np.concatenate([[0.0], res.x])
    dual, a, b = _flow_dual(mesh, rho, m, phi)
    vel, den, hj = fenchel_young_parts(rho, m, a, b)
    A = a + 0.25 * b * b
    carry = rho > 1e-3 * max(rho.max(), 1e-300)
    pot = DualPotential(phi=phi, dual_value=dual,
                        hj_min_support=float(A[carry].min()) if carry.any() else 0.0,
                        hj_min=float(A.min()))
    load_gap = None
    if load is not None:
        load_gap = primal - float(load @ phi - mesh.area @ conjugate_action(a, b))
    return Certificate(potential=pot, primal=primal, gap=primal - dual,
                       velocity_error=float(mesh.area @ vel), density_error=float(mesh.area @ den),
                       hj_error=float(mesh.area @ hj), load_gap=load_gap)


def _bump(s):
    out = np.where(np.abs(s) < 1, (1 - s * s) ** 4, 0.0)
    d = np.where(np.abs(s) < 1, -8 * s * (1 - s * s) ** 3, 0.0)
    return out, d


@dataclass
class BumpFamily:
    """Products of polynomial bumps (1 - s^2)^4 in x and t with given centers and radii."""

    x_centers: np.ndarray
    t_centers: np.ndarray
    x_radius: float
    t_radius: float

    def __len__(self):
        return self.x_centers.size

    def gradient(self, k: int, x: np.ndarray, t: np.ndarray):
        bx, dbx = _bump((x - self.x_centers[k]) / self.x_radius)
        bt, dbt = _bump((t - self.t_centers[k]) / self.t_radius)
        return bx * dbt / self.t_radius, dbx * bt / self.x_radius

    @classmethod
    def inside(cls, flow: FlowField, eps_rel: float = 1e-3, n_x: int = 5, n_t: int = 3,
               t_window: tuple[float, float] = (0.15, 0.85)) -> "BumpFamily":
        """Bumps whose supports lie in the region where every slab density exceeds eps."""
        rc = flow.rho_cells
        eps = eps_rel * rc.max()
        g = flow.grid
        n_lo = int(np.floor(t_window[0] * g.nt))
        n_hi = int(np.ceil(t_window[1] * g.nt))
        ok = np.all(rc[n_lo:n_hi] > eps, axis=0)
        idx = np.flatnonzero(ok)
        if idx.size < 4:
            raise ValueError("positive-density region is too small for test functions")
        # longest run of consecutive positive cells
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        run = max(runs, key=len)
        x_lo = g.x_nodes[run[0] + 1]
        x_hi = g.x_nodes[run[-1]]
        span = x_hi - x_lo
        rx = span / (n_x + 1)
        rt = 0.5 * (t_window[1] - t_window[0]) / n_t
        xc = np.linspace(x_lo + rx, x_hi - rx, n_x)
        tc = np.linspace(t_window[0] + rt, t_window[1] - rt, n_t)
        X, T = np.meshgrid(xc, tc, indexing="ij")
        return cls(X.ravel(), T.ravel(), rx, rt)


@dataclass
class EulerReport:
    continuity: np.ndarray       # relative weak residual per test function
    momentum: np.ndarray         # d_t(rho u) + d_x(rho u^2 - (pi^2/3) rho^3) = 0
    velocity: np.ndarray         # 2u d_t f + (u^2 - pi^2 rho^2) d_x f
    max_continuity: float
    max_momentum: float
    max_velocity: float
    n_tests: int
    family: BumpFamily = field(repr=False)


def euler_residual(flow: FlowField, family: BumpFamily | None = None,
                   eps_rel: float = 1e-3) -> EulerReport:
    """Weak residuals of the continuity, momentum and velocity equations.

    Each residual is the centroid-rule integral of the equation against a
    test function, divided by the integral of the absolute values of its
    terms so that it is scale free. Test functions are supported where the
    density exceeds ``eps_rel`` times its maximum.
    """
    if family is None:
        family = BumpFamily.inside(flow, eps_rel)
    mesh = CrissCrossMesh(flow.grid)
    rho, m = _flow_vectors(mesh, flow)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(rho > 0, m / np.where(rho > 0, rho, 1.0), 0.0)
    area = mesh.area
    xc, tc = mesh.centroid_x, mesh.centroid_t
    cont, mom, vel = [], [], []
    for k in range(len(family)):
        ft, fx = family.gradient(k, xc, tc)
        sel = (ft != 0) | (fx != 0)
        if np.any(rho[sel] <= eps_rel * rho.max()):
            warnings.warn("test function support leaves the positive-density region")
        a, w = area[sel], (ft[sel], fx[sel])
        r_, m_, u_ = rho[sel], m[sel], u[sel]
        t1, t2 = r_ * w[0], m_ * w[1]
        cont.append(abs(a @ (t1 + t2)) / (a @ (np.abs(t1) + np.abs(t2))))
        flux = m_ * u_ - PI2 / 3 * r_ ** 3
        t1, t2 = m_ * w[0], flux * w[1]
        mom.append(abs(a @ (t1 + t2)) / (a @ (np.abs(t1) + np.abs(t2))))
        t1, t2 = 2 * u_ * w[0], (u_ * u_ - PI2 * r_ * r_) * w[1]
        vel.append(abs(a @ (t1 + t2)) / (a @ (np.abs(t1) + np.abs(t2))))
    cont, mom, vel = map(np.array, (cont, mom, vel))
    return EulerReport(cont, mom, vel, float(cont.max()), float(mom.max()), float(vel.max()),
                       len(family), family)


@dataclass
class CharacteristicsReport:
    window: tuple[float, float, float, float]
    times: np.ndarray
    mismatch: np.ndarray         # max over sample points per time, relative to max |f|
    max_mismatch: float


def characteristics_check(flow: FlowField, window: tuple[float, float, float, float] | None = None,
                          degree: int = 10, n_samples: int = 41,
                          fit_fraction: float = 0.6) -> CharacteristicsReport:
    """Transport check for f = u + i pi rho along z -> z + (t - t0) f(z, t0).

    The field at each slab is fitted by Chebyshev polynomials on the central
    ``fit_fraction`` of the positive-density interval (away from the
    square-root edges), which gives its analytic continuation near the real
    axis. Samples z lie in ``window = (x_lo, x_hi, t0, t1)``; for every
    slab time t in [t0, t1] the mismatch ``|f(z + (t - t0) f(z, t0), t) - f(z, t0)|``
    is reported relative to max |f|. At t = t0 it vanishes identically.
    """
    g = flow.grid
    rc = flow.rho_cells
    uc = flow.velocity_cells
    times = g.t_centers
    eps = 1e-3 * rc.max()
    if window is None:
        lo, hi = _positive_interval(rc[g.nt // 2], g.x_centers, eps)
        w = 0.25 * (hi - lo)
        window = (lo + w, hi - w, 0.25, 0.75)
    x_lo, x_hi, t0, t1 = window
    sel = np.flatnonzero((times >= t0 - 1e-12) & (times <= t1 + 1e-12))
    if sel.size == 0:
        raise ValueError("window contains no slab midpoints")
    z = np.linspace(x_lo, x_hi, n_samples)
    fits = {}

    def fit(n):
        if n not in fits:
            lo, hi = _positive_interval(rc[n], g.x_centers, eps)
            c, hw = 0.5 * (lo + hi), 0.5 * (hi - lo) * fit_fraction
            lo, hi = c - hw, c + hw
            if x_lo <= lo or x_hi >= hi:
                warnings.warn("window leaves the interior of the positive-density region")
            inner = (g.x_centers > lo) & (g.x_centers < hi)
            xs = g.x_centers[inner]
            dom = [lo, hi]
            pu = C.Chebyshev.fit(xs, uc[n][inner], degree, domain=dom)
            pr = C.Chebyshev.fit(xs, rc[n][inner], degree, domain=dom)
            fits[n] = (pu, pr)
        return fits[n]

    n0 = sel[0]
    pu0, pr0 = fit(n0)
    f0 = pu0(z) + 1j * np.pi * pr0(z)
    scale = np.max(np.abs(f0))
    mism = []
    for n in sel:
        pu, pr = fit(n)
        zeta = z + (times[n] - times[n0]) * f0
        fz = pu(zeta) + 1j * np.pi * pr(zeta)
        mism.append(np.max(np.abs(fz - f0)) / scale)
    mism = np.array(mism)
    return CharacteristicsReport(window=(x_lo, x_hi, float(times[n0]), float(times[sel[-1]])),
                                 times=times[sel], mismatch=mism, max_mismatch=float(mism.max()))


def _positive_interval(rho_row, xc, eps):
    idx = np.flatnonzero(rho_row > eps)
    runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
    run = max(runs, key=len)
    return float(xc[run[0]]), float(xc[run[-1]])
