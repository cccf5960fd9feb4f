"""Coupled matrix models: Ising, chain, Potts and induced QCD on a ring.

Every model is a graph whose sites carry spectral measures and whose bonds
carry one spherical-integral coupling each. In the large-N limit the free
energy is minus the minimum of

    O(mu) = sum_i [ mu_i(P_i) - (deg_i / 2) mu_i(x^2) - c_i Sigma(mu_i) ]
            + (beta / 4) sum_{bonds (i, j)} S(mu_i, mu_j),
    c_i = beta/2 - (beta/4) deg_i,

where S is the minimal bridge action of :mod:`hcizflow.eulerflow`, plus
(#sites - #bonds) times the one-matrix constant inf I_beta. The free energy
is normalized by the Gaussian partition function exp(-N tr A^2 / 2) of each
site, which makes the Gaussian Ising model give -(beta/4) log(a^2 - 1).

The minimization is a proximal-gradient method in the logarithmic-energy
metric: each outer step linearizes the bridge terms through the dual
potentials of the bridge solves and solves one strictly convex log-gas
problem per site. Steps are accepted only when the objective does not
increase, so the recorded objective history is nonincreasing.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .freeconv import catalan
from .eulerflow.mesh import CrissCrossMesh, SpaceTimeGrid
from .eulerflow.solver import BridgeOptions, BridgeResult, inf_one_matrix_rate, solve_bridge
from .measures import (
    Grid,
    GridMeasure,
    Polynomial,
    hilbert_transform,
    load_vector,
    log_kernel_matrix,
    minimize_log_gas,
    moment,
)

__all__ = [
    "ModelSpec",
    "ModelGrid",
    "OuterOptions",
    "ModelResult",
    "ModelNotConverged",
    "SchemaMismatch",
    "SCHEMA_VERSION",
    "ModelGraph",
    "build_graph",
    "solve_model",
    "solve_ising",
    "solve_chain",
    "solve_potts",
    "solve_qcd1",
    "schwinger_dyson_residuals",
    "moment_ladder_residuals",
    "CatalanReport",
    "catalan_envelope",
]

KINDS = ("ising", "potts", "chain", "qcd1")
SCHEMA_VERSION = 1


class SchemaMismatch(ValueError):
    """A configuration file was written for another schema version."""


class ModelNotConverged(RuntimeError):
    """Outer iteration stopped before the objective settled."""

    def __init__(self, message: str, result: "ModelResult"):
        super().__init__(message)
        self.result = result


@dataclass
class ModelGrid:
    nx: int = 64
    nt: int = 32
    span: tuple[float, float] | None = None   # automatic when None
    pad: float = 1.75                          # margin added to the estimated support


@dataclass
class OuterOptions:
    tol: float = 1e-8            # relative objective decrease that ends the iteration
                                 # (never below the accuracy of the bridge actions)
    max_iter: int = 300
    step: float = 1.0            # initial proximal step
    max_step: float = 2.0
    inner_tol: float = 1e-6      # bridge solver tolerance
    inner_max_iter: int = 20_000
    seed: int = 0
    n_starts: int = 3            # multi-start count for Potts with q > 3
    perturbation: float = 0.0    # relative size of the random initial perturbation
    raise_on_failure: bool = True


@dataclass
class ModelSpec:
    """Which model to solve, with its potentials and discretization."""

    kind: str
    beta: float = 2.0
    potentials: tuple = ()
    q: int = 2
    lattice_size: int = 4
    grid: ModelGrid = field(default_factory=ModelGrid)
    solver: OuterOptions = field(default_factory=OuterOptions)
    require_quartic: bool = True

    def __post_init__(self):
        self.kind = self.kind.lower()
        self.potentials = tuple(p if isinstance(p, Polynomial) else Polynomial(tuple(p))
                                for p in self.potentials)
        if isinstance(self.grid, dict):
            g = dict(self.grid)
            if g.get("span") is not None:
                g["span"] = tuple(g["span"])
            self.grid = ModelGrid(**g)
        if isinstance(self.solver, dict):
            self.solver = OuterOptions(**self.solver)
        self.validate()

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        if self.beta not in (1, 2):
            raise ValueError("beta must be 1 or 2")
        if self.q < 2:
            raise ValueError("q must be at least 2")
        want = {"ising": 2, "potts": self.q, "chain": self.q, "qcd1": 1}[self.kind]
        if len(self.potentials) == 1 and want > 1:
            self.potentials = self.potentials * want
        if len(self.potentials) != want:
            raise ValueError(f"{self.kind} needs {want} potentials, got {len(self.potentials)}")
        for P in self.potentials:
            if not P.is_confining():
                raise ValueError(f"potential {P.coeffs} is not confining")
            if self.require_quartic and not P.has_quartic_growth():
                raise ValueError(f"potential {P.coeffs} lacks quartic growth")
        if self.kind == "qcd1" and self.lattice_size < 2:
            raise ValueError("the ring needs at least two sites")

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        d = dict(d)
        schema = d.pop("schema", SCHEMA_VERSION)
        if schema != SCHEMA_VERSION:
            raise SchemaMismatch(f"config schema {schema!r} does not match version {SCHEMA_VERSION}")
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ModelSpec":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "beta": self.beta, "q": self.q,
            "lattice_size": self.lattice_size,
            "potentials": [list(p.coeffs) for p in self.potentials],
            "grid": asdict(self.grid), "solver": asdict(self.solver),
            "require_quartic": self.require_quartic, "schema": SCHEMA_VERSION,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class ModelGraph:
    """Sites with potentials and oriented bonds (start site, end site)."""

    potentials: tuple
    bonds: tuple
    multiplicity: int = 1      # copies of the graph in the physical lattice

    @property
    def n_sites(self) -> int:
        return len(self.potentials)

    @property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n_sites, dtype=int)
        for i, j in self.bonds:
            deg[i] += 1
            deg[j] += 1
        return deg


def build_graph(spec: ModelSpec) -> ModelGraph:
    """Reduce a model to its coupling graph.

    The ring of induced QCD is reduced to one site with a self-bond: its
    minimizer is translation invariant, so every bond is a bridge from a
    measure to itself.
    """
    P = spec.potentials
    if spec.kind == "ising" or (spec.kind in ("potts", "chain") and spec.q == 2):
        return ModelGraph(P, ((0, 1),))
    if spec.kind == "chain":
        return ModelGraph(P, tuple((i, i + 1) for i in range(spec.q - 1)))
    if spec.kind == "potts":
        return ModelGraph(P, tuple((0, i) for i in range(1, spec.q)))
    return ModelGraph(P, ((0, 0),), multiplicity=spec.lattice_size)


@dataclass
class ModelResult:
    spec: ModelSpec
    measures: list                      # GridMeasure per site
    flows: list                         # BridgeResult per bond
    free_energy: float                  # Gaussian-normalized, whole lattice
    free_energy_per_site: float
    free_energy_display: float          # same minimum with the displayed constant convention
    objective: float
    objective_history: list
    sd_residuals: list                  # per site, weak residuals against Chebyshev tests
    iterations: int
    converged: bool
    label: str = "global minimum"
    antisymmetry: float | None = None   # max |u_0 + u_1| on the support (ring only)
    alternatives: list = field(default_factory=list)
    runtime: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "kind": self.spec.kind, "beta": self.spec.beta,
            "free_energy": self.free_energy,
            "free_energy_per_site": self.free_energy_per_site,
            "free_energy_display": self.free_energy_display,
            "objective": self.objective, "iterations": self.iterations,
            "converged": self.converged, "label": self.label,
            "sd_residual_max": float(max(np.max(r) for r in self.sd_residuals)),
            "antisymmetry": self.antisymmetry,
            "bridge_rel_gaps": [f.rel_gap for f in self.flows],
            "alternatives": [a["free_energy"] for a in self.alternatives],
            "runtime_s": self.runtime,
            "config_hash": self.spec.config_hash(),
            "seed": self.spec.solver.seed,
            "diagnostics": self.diagnostics,
        }


# ---------------------------------------------------------------- helpers

def _mass_matrix_apply(dx: float, v: np.ndarray) -> np.ndarray:
    """Product with the P1 mass matrix of a uniform grid."""
    out = 4.0 * v
    out[1:] += v[:-1]
    out[:-1] += v[1:]
    out[0] -= 2.0 * v[0]
    out[-1] -= 2.0 * v[-1]
    return out * dx / 6.0


def _estimate_span(spec: ModelSpec) -> tuple[float, float]:
    """Support of the one-matrix equilibria of the potentials plus padding."""
    lo, hi = np.inf, -np.inf
    beta = spec.beta
    for P in spec.potentials:
        g = Grid.uniform(-8.0, 8.0, 321)
        K = log_kernel_matrix(g)
        r, *_ = minimize_log_gas(load_vector(g, P), 0.5 * beta, K, g.weights)
        mu = GridMeasure(g, r)
        a, b = mu.support(1e-9)
        lo, hi = min(lo, a), max(hi, b)
    pad = spec.grid.pad
    return lo - pad, hi + pad


@dataclass
class _Setup:
    graph: ModelGraph
    grid: SpaceTimeGrid
    mesh: CrissCrossMesh
    xgrid: Grid
    K: np.ndarray
    w: np.ndarray
    pot_load: list
    coeff: np.ndarray
    beta: float
    interior: slice


def _setup(spec: ModelSpec) -> _Setup:
    graph = build_graph(spec)
    span = spec.grid.span or _estimate_span(spec)
    grid = SpaceTimeGrid(float(span[0]), float(span[1]), spec.grid.nx, spec.grid.nt)
    mesh = CrissCrossMesh(grid)
    xgrid = Grid(grid.x_nodes)
    K = log_kernel_matrix(xgrid)
    deg = graph.degrees
    half_sq = Polynomial((0.0, 0.0, 0.5))
    pot_load = [load_vector(xgrid, P.plus(half_sq, -float(deg[i])))
                for i, P in enumerate(graph.potentials)]
    coeff = spec.beta / 2 - spec.beta / 4 * deg
    return _Setup(graph, grid, mesh, xgrid, K, xgrid.weights, pot_load, coeff,
                  float(spec.beta), slice(1, -1))


def _site_energy(st: _Setup, dens: list) -> float:
    return float(sum(st.pot_load[i] @ r - st.coeff[i] * (r @ st.K @ r)
                     for i, r in enumerate(dens)))


def _solve_bonds(st: _Setup, dens: list, opts: OuterOptions, warm: list | None) -> list:
    bridge_opts = BridgeOptions(tol=opts.inner_tol, max_iter=opts.inner_max_iter,
                                raise_on_failure=False, boundary_tol=1e-5)
    out = []
    for k, (i, j) in enumerate(st.graph.bonds):
        mu0 = GridMeasure(st.xgrid, dens[i])
        mu1 = GridMeasure(st.xgrid, dens[j])
        out.append(solve_bridge(mu0, mu1, st.beta, st.grid, bridge_opts,
                                warm=None if warm is None else warm[k], mesh=st.mesh))
    return out


def _objective(st: _Setup, dens: list, flows: list) -> float:
    return _site_energy(st, dens) + 0.25 * st.beta * sum(f.action for f in flows)


def _bond_gradients(st: _Setup, flows: list) -> list:
    """Gradient of (beta/4) sum S with respect to the node densities of each site."""
    grads = [np.zeros(st.xgrid.n) for _ in range(st.graph.n_sites)]
    dx = st.grid.dx
    for (i, j), f in zip(st.graph.bonds, flows):
        phi0 = f.phi[st.mesh.bottom_nodes]
        phi1 = f.phi[st.mesh.top_nodes]
        grads[i] -= 0.25 * st.beta * _mass_matrix_apply(dx, phi0)
        grads[j] += 0.25 * st.beta * _mass_matrix_apply(dx, phi1)
    return grads


def _prox_step(st: _Setup, dens: list, grads: list, tau: float) -> list | None:
    sl = st.interior
    Ki = st.K[sl, sl]
    wi = st.w[sl]
    new = []
    for i, r in enumerate(dens):
        a = st.coeff[i] + 1.0 / (2.0 * tau)
        if a <= 0:
            return None
        lin = st.pot_load[i] + grads[i] + (st.K @ r) / tau
        ri, *_ = minimize_log_gas(lin[sl], a, Ki, wi, start=r[sl])
        full = np.zeros_like(r)
        full[sl] = ri
        new.append(full)
    return new


def _initial_densities(st: _Setup, opts: OuterOptions, rng: np.random.Generator,
                       init: list | None) -> list:
    sl = st.interior
    dens = []
    for i, P in enumerate(st.graph.potentials):
        if init is not None:
            r = np.asarray(init[i].on_grid(st.xgrid).density, dtype=float).copy()
        else:
            lin = load_vector(st.xgrid, P)
            ri, *_ = minimize_log_gas(lin[sl], 0.5 * st.beta, st.K[sl, sl], st.w[sl])
            r = np.zeros(st.xgrid.n)
            r[sl] = ri
        if opts.perturbation > 0:
            x = st.xgrid.nodes
            c = rng.normal(size=3)
            bump = 1.0 + opts.perturbation * np.tanh(c[0] * x + c[1] * x ** 2 / 4 + c[2])
            r = r * bump
        r[[0, 1, -2, -1]] = 0.0
        dens.append(r / (st.w @ r))
    return dens


def _u_cells(st: _Setup, phi_row: np.ndarray) -> np.ndarray:
    """Velocity d_x phi / 2 on each x cell of an endpoint row."""
    return np.diff(phi_row) / (2.0 * st.grid.dx)


def _stationarity_force(st: _Setup, site: int, mu: GridMeasure, flows: list, x: np.ndarray,
                        cell: np.ndarray) -> np.ndarray:
    """P' - deg x - 2 c H mu + (beta/2) (sum of end velocities - sum of start velocities)."""
    P = st.graph.potentials[site]
    deg = st.graph.degrees[site]
    force = P.derivative()(x) - deg * x - 2.0 * st.coeff[site] * hilbert_transform(mu, x)
    for (i, j), f in zip(st.graph.bonds, flows):
        if i == site:
            force -= 0.5 * st.beta * _u_cells(st, f.phi[st.mesh.bottom_nodes])[cell]
        if j == site:
            force += 0.5 * st.beta * _u_cells(st, f.phi[st.mesh.top_nodes])[cell]
    return force


def _support_points(mu: GridMeasure, order: int = 6):
    pts, wts, cell, loc = mu.grid.gauss_points(order)
    dens = mu.density_at(pts)
    keep = dens > 0
    return pts[keep], wts[keep] * dens[keep], cell[keep]


def chebyshev_tests(lo: float, hi: float, count: int = 10):
    """T_0..T_{count-1} rescaled to [lo, hi]."""
    def make(k):
        def h(x):
            s = np.clip((2 * np.asarray(x) - lo - hi) / (hi - lo), -1.0, 1.0)
            return np.cos(k * np.arccos(s))
        return h
    return [make(k) for k in range(count)]


def _weak_residuals(st: _Setup, site: int, mu: GridMeasure, flows: list, tests) -> np.ndarray:
    x, w, cell = _support_points(mu)
    force = _stationarity_force(st, site, mu, flows, x, cell)
    return np.array([abs(np.sum(w * force * h(x))) for h in tests])


def schwinger_dyson_residuals(result: "ModelResult", count: int = 10) -> list:
    """Weak stationarity residuals of every site against Chebyshev test functions."""
    st = result.diagnostics["_setup"]
    out = []
    for i, mu in enumerate(result.measures):
        lo, hi = mu.support(1e-12)
        out.append(_weak_residuals(st, i, mu, result.flows, chebyshev_tests(lo, hi, count)))
    return out


def moment_ladder_residuals(result: "ModelResult", site: int = 0, max_n: int = 6) -> np.ndarray:
    """Stationarity tested against h = x^n, relative to the size of mu(P' x^n).

    For the Ising model with beta = 2 this is the finite moment ladder
    mu(P' x^n) = mu(T x^n) + sum_p mu(x^p) mu(x^(n-1-p)) with the conditional
    expectation T of the partner matrix represented by x + u_0 - H mu.
    """
    st = result.diagnostics["_setup"]
    mu = result.measures[site]
    x, w, cell = _support_points(mu)
    force = _stationarity_force(st, site, mu, result.flows, x, cell)
    dP = st.graph.potentials[site].derivative()(x)
    res = []
    for n in range(max_n + 1):
        h = x ** n
        res.append(abs(np.sum(w * force * h)) / max(np.sum(w * np.abs(dP * h)), 1e-300))
    return np.array(res)


# ---------------------------------------------------------------- solver

def _run(spec: ModelSpec, st: _Setup, rng: np.random.Generator, init: list | None,
         opts: OuterOptions) -> dict:
    dens = _initial_densities(st, opts, rng, init)
    flows = _solve_bonds(st, dens, opts, None)
    obj = _objective(st, dens, flows)
    history = [obj]
    tau = opts.step
    noise = lambda fl: 0.25 * st.beta * sum(abs(f.gap) for f in fl) + 1e-12
    converged = False
    it = 0
    for it in range(1, opts.max_iter + 1):
        grads = _bond_gradients(st, flows)
        accepted = False
        while tau > 1e-6:
            cand = _prox_step(st, dens, grads, tau)
            if cand is None:
                tau *= 0.5
                continue
            cflows = _solve_bonds(st, cand, opts, flows)
            cobj = _objective(st, cand, cflows)
            if cobj <= obj + noise(cflows):
                accepted = True
                break
            tau *= 0.5
        if not accepted:
            break
        change = obj - cobj
        dens, flows, obj = cand, cflows, min(cobj, obj)
        history.append(cobj)
        # stop once the decrease is below the accuracy of the bridge actions
        if abs(change) <= max(opts.tol * max(1.0, abs(obj)), noise(flows)):
            converged = True
            break
        tau = min(2.0 * tau, opts.max_step)
    return {"dens": dens, "flows": flows, "objective": obj, "history": history,
            "iterations": it, "converged": converged}


def _finish(spec: ModelSpec, st: _Setup, run: dict, t0: float) -> ModelResult:
    graph = st.graph
    inf_rate = inf_one_matrix_rate(float(spec.beta))
    obj = run["objective"]
    n_sites, n_bonds = graph.n_sites, len(graph.bonds)
    F = graph.multiplicity * (-obj + (n_sites - n_bonds) * inf_rate)
    F_display = graph.multiplicity * (-(obj + n_bonds * inf_rate) - n_sites * inf_rate)
    measures = [GridMeasure(st.xgrid, r) for r in run["dens"]]
    res = ModelResult(
        spec=spec, measures=measures, flows=run["flows"], free_energy=float(F),
        free_energy_per_site=float(F / (graph.multiplicity * n_sites)),
        free_energy_display=float(F_display), objective=float(obj),
        objective_history=run["history"], sd_residuals=[], iterations=run["iterations"],
        converged=run["converged"], runtime=time.perf_counter() - t0,
        diagnostics={"_setup": st, "inf_rate": inf_rate,
                     "span": (st.grid.a, st.grid.b)},
    )
    res.sd_residuals = schwinger_dyson_residuals(res)
    if spec.kind == "qcd1":
        res.antisymmetry = ring_antisymmetry(res)
    return res


def ring_antisymmetry(result: ModelResult, threshold: float = 1e-3) -> float:
    """max |u_0 + u_1| over cells where the site density exceeds threshold * max."""
    st = result.diagnostics["_setup"]
    f = result.flows[0]
    u0 = _u_cells(st, f.phi[st.mesh.bottom_nodes])
    u1 = _u_cells(st, f.phi[st.mesh.top_nodes])
    r = result.measures[0].density
    cell_mass = 0.5 * (r[:-1] + r[1:])
    keep = np.minimum(r[:-1], r[1:]) > threshold * r.max()
    if not np.any(keep):
        keep = cell_mass > 0
    return float(np.max(np.abs(u0 + u1)[keep]))


def solve_model(spec: ModelSpec, init: list | None = None) -> ModelResult:
    """Minimize the model functional; dispatches on ``spec.kind``."""
    t0 = time.perf_counter()
    opts = spec.solver
    st = _setup(spec)
    rng = np.random.default_rng(opts.seed)
    run = _run(spec, st, rng, init, opts)
    result = _finish(spec, st, run, t0)
    if spec.kind == "potts" and spec.q > 3:
        result.label = "local optimum"
        found = [run]
        for s in range(1, opts.n_starts):
            o = OuterOptions(**{**asdict(opts), "perturbation": max(opts.perturbation, 0.3),
                                "seed": opts.seed + s})
            found.append(_run(spec, st, np.random.default_rng(o.seed), None, o))
        distinct = []
        for r in found:
            if all(abs(r["objective"] - d["objective"]) > 1e-5 for d in distinct):
                distinct.append(r)
        best = min(found, key=lambda r: r["objective"])
        result = _finish(spec, st, best, t0)
        result.label = "local optimum"
        result.alternatives = [
            {"free_energy": float(-r["objective"] + (st.graph.n_sites - len(st.graph.bonds))
                                  * result.diagnostics["inf_rate"]),
             "objective": float(r["objective"]), "converged": r["converged"],
             "sd_residual_max": float(max(np.max(x) for x in _finish(spec, st, r, t0).sd_residuals))}
            for r in distinct]
        result.diagnostics["non_unique"] = len(distinct) > 1
    if not result.converged and opts.raise_on_failure:
        raise ModelNotConverged(
            f"outer iteration stopped after {result.iterations} steps; "
            f"last objective change {np.diff(result.objective_history[-2:])}", result)
    return result


def _check_kind(spec: ModelSpec, kind: str) -> None:
    if spec.kind != kind:
        raise ValueError(f"expected a {kind} spec, got {spec.kind}")


def solve_ising(spec: ModelSpec, init: list | None = None) -> ModelResult:
    _check_kind(spec, "ising")
    return solve_model(spec, init)


def solve_chain(spec: ModelSpec, init: list | None = None) -> ModelResult:
    _check_kind(spec, "chain")
    return solve_model(spec, init)


def solve_potts(spec: ModelSpec, init: list | None = None) -> ModelResult:
    _check_kind(spec, "potts")
    return solve_model(spec, init)


def solve_qcd1(spec: ModelSpec, init: list | None = None) -> ModelResult:
    _check_kind(spec, "qcd1")
    return solve_model(spec, init)


# ---------------------------------------------------------------- moment envelope

@dataclass
class CatalanReport:
    moments: np.ndarray          # |mu(x^p)| for p = 0..max_p
    envelope_index: np.ndarray   # Catalan index used for each p
    R: float | None              # radius that was checked
    holds: bool | None           # whether a_p <= R^p C for all p
    minimal_R: float             # smallest R satisfying every inequality
    support_bound: float         # minimal_R + 4
    moment_radius: float         # 2 * minimal_R with half indexing: a bound on |x| over the support


def catalan_envelope(mu: GridMeasure, R: float | None = None, max_p: int = 12,
                     indexing: str = "half") -> CatalanReport:
    """Compare |mu(x^p)| with R^p times a Catalan number.

    ``indexing="half"`` uses C_{ceil(p/2)}, for which the unit semicircle is
    extremal with R = 1. ``indexing="full"`` uses C_p, the weaker envelope
    of the compact-support induction.
    """
    if R is not None and R <= 0:
        raise ValueError("R must be positive")
    a = np.array([abs(moment(mu, p)) for p in range(max_p + 1)])
    if indexing == "half":
        idx = np.array([(p + 1) // 2 for p in range(max_p + 1)])
    elif indexing == "full":
        idx = np.arange(max_p + 1)
    else:
        raise ValueError("indexing must be 'half' or 'full'")
    C = np.array([catalan(int(k)) for k in idx], dtype=float)
    ratios = [(a[p] / C[p]) ** (1.0 / p) for p in range(1, max_p + 1)]
    Rmin = float(max(ratios)) if ratios else 0.0
    holds = None
    if R is not None:
        holds = bool(np.all(a <= R ** np.arange(max_p + 1) * C * (1 + 1e-12)))
    return CatalanReport(a, idx, R, holds, Rmin, Rmin + 4.0,
                         2.0 * Rmin if indexing == "half" else 4.0 * Rmin)
