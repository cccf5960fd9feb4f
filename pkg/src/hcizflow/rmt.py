"""Finite-N random-matrix oracles.

* :func:`hciz_exact` evaluates the unitary spherical integral
  ``I_N = int exp(N tr(U D U* E)) dU`` through its determinant formula in
  ball arithmetic, raising the working precision until the result is
  certified to double precision.
* :func:`hciz_mc` averages the same integrand over Haar samples (unitary or
  orthogonal) with a jackknife error bar.
* :func:`gibbs_two_matrix` is an entrywise Metropolis sampler for the
  coupled two-matrix measure ``exp(c N tr(AB) - N tr P1(A) - N tr P2(B))``.
* :func:`matrix_bridge_sampler` draws Brownian bridges between matrices
  with prescribed spectra and records spectra along the way.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .measures import Grid, GridMeasure

__all__ = [
    "SpectrumPair",
    "MCConfig",
    "MCEstimate",
    "HCIZInfo",
    "Histogram",
    "GibbsResult",
    "BridgeSamples",
    "VarianceOverflowError",
    "hciz_exact",
    "hciz_mc",
    "haar_matrices",
    "gibbs_two_matrix",
    "matrix_bridge_sampler",
    "tilted_unitaries",
    "wasserstein_to_measure",
    "quantile_spectrum",
    "effective_sample_size",
]


class VarianceOverflowError(RuntimeError):
    """A single sample carries most of the Monte Carlo weight."""


# ---------------------------------------------------------------- data types

def quantile_spectrum(mu: GridMeasure, N: int) -> np.ndarray:
    """Quantiles F^{-1}((i - 1/2)/N), i = 1..N."""
    return np.asarray(mu.quantile((np.arange(N) + 0.5) / N), dtype=float)


@dataclass(frozen=True)
class SpectrumPair:
    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float).ravel()
        e = np.asarray(self.e, dtype=float).ravel()
        if d.size != e.size or d.size < 1:
            raise ValueError("d and e must have the same positive length")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise ValueError("spectra must be finite")
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)

    @property
    def N(self) -> int:
        return self.d.size

    def swapped(self) -> "SpectrumPair":
        return SpectrumPair(self.e, self.d)

    @classmethod
    def from_measures(cls, mu0: GridMeasure, mu1: GridMeasure, N: int) -> "SpectrumPair":
        return cls(quantile_spectrum(mu0, N), quantile_spectrum(mu1, N))


@dataclass
class MCConfig:
    """Sampling parameters shared by the Monte Carlo routines."""

    samples: int = 20_000          # Haar samples, or recorded configurations
    batch: int = 2_000             # Haar samples per random stream
    sweeps: int = 100_000          # Metropolis sweeps after burn-in
    burn_in: int = 5_000
    thin: int = 50                 # record every thin-th sweep
    step: float = 0.3              # initial proposal scale
    target_accept: float = 0.3
    coupling: float = 1.0          # strength of N tr(AB); 0 gives the product measure
    bins: int = 60
    seed: int = 0

    def __post_init__(self):
        if self.samples < 2 or self.batch < 1 or self.thin < 1:
            raise ValueError("samples >= 2, batch >= 1 and thin >= 1 are required")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class MCEstimate:
    value: float
    stderr: float
    n_samples: int
    seed: int

    def __post_init__(self):
        self.value = float(self.value)
        self.stderr = float(self.stderr)
        self.n_samples = int(self.n_samples)
        self.seed = int(self.seed)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class HCIZInfo:
    value: float
    precision_bits: int
    perturbed: bool
    min_gap_d: float
    min_gap_e: float


# ---------------------------------------------------------------- exact HCIZ

def _separate(x: np.ndarray, rel: float) -> tuple[np.ndarray, bool]:
    """Sort and push apart entries closer than rel * span."""
    x = np.sort(x)
    span = x[-1] - x[0]
    if span == 0:
        return x, False
    eps = rel * span
    out = x.copy()
    moved = False
    for k in range(1, out.size):
        if out[k] - out[k - 1] < eps:
            out[k] = out[k - 1] + eps
            moved = True
    return out, moved


def _log_vandermonde(x: np.ndarray) -> float:
    diff = x[None, :] - x[:, None]
    iu = np.triu_indices(x.size, 1)
    return float(np.sum(np.log(diff[iu])))


def hciz_exact(pair: SpectrumPair, N: int | None = None, merge_tol: float = 1e-9,
               max_bits: int = 1 << 17, return_info: bool = False):
    """N^-2 log of the unitary spherical integral, from the determinant formula

        I_N = prod_{p<N} p! * det[exp(N d_i e_j)] / (N^{N(N-1)/2} Delta(d) Delta(e)).

    The determinant is evaluated in ball arithmetic after scaling each row
    by its largest entry; the precision doubles until the ball radius is
    below 1e-15 of the midpoint. Entries closer than ``merge_tol`` times the
    span are pushed apart with a warning.
    """
    import flint

    n = pair.N
    if N is not None and N != n:
        raise ValueError(f"pair has {n} eigenvalues but N={N}")
    d, e = pair.d, pair.e
    # constant spectra: the integrand does not depend on U
    if np.ptp(d) == 0 or np.ptp(e) == 0:
        val = float(np.mean(d) * np.mean(e)) if n > 0 else 0.0
        info = HCIZInfo(val, 53, False, 0.0, 0.0)
        return (val, info) if return_info else val
    ds, pd = _separate(d, merge_tol)
    es, pe = _separate(e, merge_tol)
    if pd or pe:
        warnings.warn("near-coincident eigenvalues were separated before the determinant "
                      "evaluation", RuntimeWarning, stacklevel=2)
    shift = float(n) * ds * es[-1]
    bits = 128
    old = flint.ctx.prec
    try:
        while True:
            flint.ctx.prec = bits
            Nn = flint.arb(n)
            M = flint.arb_mat(n, n)
            for i in range(n):
                di = flint.arb(float(ds[i]))
                for j in range(n):
                    M[i, j] = (Nn * di * (flint.arb(float(es[j])) - flint.arb(float(es[-1])))).exp()
            det = M.det()
            if det > 0:
                logdet = det.log()
                if float(logdet.rad()) < 1e-15 * max(1.0, abs(float(logdet.mid()))):
                    break
            if bits >= max_bits:
                raise ArithmeticError(
                    f"determinant not resolved at {bits} bits; spectra are too ill-conditioned")
            bits *= 2
    finally:
        flint.ctx.prec = old
    log_det = float(logdet.mid()) + float(np.sum(shift))
    log_fact = sum(math.lgamma(p + 1) for p in range(1, n))
    log_I = (log_fact - 0.5 * n * (n - 1) * math.log(n) + log_det
             - _log_vandermonde(ds) - _log_vandermonde(es))
    val = log_I / n ** 2
    if return_info:
        gd = float(np.min(np.diff(ds))) if n > 1 else 0.0
        ge = float(np.min(np.diff(es))) if n > 1 else 0.0
        return val, HCIZInfo(val, bits, pd or pe, gd, ge)
    return val


# ---------------------------------------------------------------- Haar Monte Carlo

def haar_matrices(rng: np.random.Generator, N: int, size: int, beta: int = 2) -> np.ndarray:
    """Haar-distributed unitary (beta=2) or orthogonal (beta=1) matrices, shape (size, N, N).

    QR of a Gaussian matrix, with the phases of R's diagonal moved into Q.
    """
    if beta == 2:
        Z = (rng.standard_normal((size, N, N)) + 1j * rng.standard_normal((size, N, N))) / np.sqrt(2)
    elif beta == 1:
        Z = rng.standard_normal((size, N, N))
    else:
        raise ValueError("beta must be 1 or 2")
    Q, R = np.linalg.qr(Z)
    diag = np.diagonal(R, axis1=1, axis2=2)
    ph = diag / np.abs(diag)
    return Q * ph[:, None, :]


def _streams(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def _log_mean_exp_jackknife(x: np.ndarray) -> tuple[float, float, float, float]:
    """log(mean(exp x)), its jackknife standard error, the largest weight
    share and the effective number of samples (sum w)^2 / sum w^2."""
    n = x.size
    m = np.max(x)
    w = np.exp(x - m)
    S = w.sum()
    val = m + math.log(S / n)
    loo = m + np.log(np.maximum(S - w, 1e-300 * S) / (n - 1))
    jk = math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2))
    return val, jk, float(np.max(w) / S), float(S * S / np.sum(w * w))


def hciz_mc(pair: SpectrumPair, N: int | None = None, beta: int = 2,
            cfg: MCConfig | None = None, min_ess: float = 100.0) -> MCEstimate:
    """N^-2 log of the Haar average of exp(N tr(U D U* E)), with jackknife error.

    Samples come in batches, each from its own stream spawned from the seed,
    so the result does not depend on the order in which batches are merged.
    When the exponential weights are so skewed that fewer than ``min_ess``
    samples effectively contribute, the jackknife error is meaningless and
    :class:`VarianceOverflowError` is raised instead of returning an estimate.
    """
    cfg = cfg or MCConfig()
    n = pair.N
    if N is not None and N != n:
        raise ValueError(f"pair has {n} eigenvalues but N={N}")
    if beta not in (1, 2):
        raise ValueError("beta must be 1 or 2")
    d, e = pair.d, pair.e
    if np.all(e == 0) or np.all(d == 0):
        return MCEstimate(0.0, 0.0, cfg.samples, cfg.seed)
    n_batches = -(-cfg.samples // cfg.batch)
    xs = []
    for b, rng in enumerate(_streams(cfg.seed, n_batches)):
        size = min(cfg.batch, cfg.samples - b * cfg.batch)
        U = haar_matrices(rng, n, size, beta)
        W = np.abs(U) ** 2
        xs.append(n * np.einsum("i,sij,j->s", e, W, d))
    x = np.concatenate(xs)
    val, err, share, ess = _log_mean_exp_jackknife(x)
    if share > 0.5 or ess < min_ess:
        raise VarianceOverflowError(
            f"one sample carries {share:.0%} of the weight (effective sample size {ess:.1f}); "
            "use a smaller N or narrower spectra")
    return MCEstimate(val / n ** 2, err / n ** 2, int(x.size), cfg.seed)


# ---------------------------------------------------------------- histograms

@dataclass
class Histogram:
    edges: np.ndarray
    mass: np.ndarray
    samples: np.ndarray = field(repr=False, default_factory=lambda: np.zeros(0))

    @classmethod
    def from_samples(cls, samples: np.ndarray, bins: int, span: tuple[float, float] | None = None):
        s = np.sort(np.asarray(samples, dtype=float).ravel())
        lo, hi = span if span is not None else (s[0], s[-1])
        pad = 1e-9 * max(hi - lo, 1.0)
        edges = np.linspace(lo - pad, hi + pad, bins + 1)
        counts, _ = np.histogram(s, bins=edges)
        return cls(edges, counts / s.size, s)

    def to_csv(self, path) -> None:
        lines = ["bin_left,bin_right,mass"]
        lines += [f"{a!r},{b!r},{m!r}" for a, b, m in
                  zip(self.edges[:-1].tolist(), self.edges[1:].tolist(), self.mass.tolist())]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")

    def to_measure(self) -> GridMeasure:
        """Piecewise-linear density through the bin centers, zero at the outer edges."""
        c = 0.5 * (self.edges[:-1] + self.edges[1:])
        nodes = np.concatenate([[self.edges[0]], c, [self.edges[-1]]])
        dens = np.concatenate([[0.0], self.mass / np.diff(self.edges), [0.0]])
        return GridMeasure(Grid(nodes), dens)


def wasserstein_to_measure(samples: np.ndarray, mu: GridMeasure, n: int = 20_001) -> float:
    """W1 between the empirical law of the samples and mu: the L1 distance of CDFs."""
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    a = min(s[0], mu.nodes[0])
    b = max(s[-1], mu.nodes[-1])
    z = np.union1d(np.linspace(a, b, n), s)
    F_emp = np.searchsorted(s, z, side="right") / s.size
    d = np.abs(F_emp - mu.cdf(z))
    return float(np.sum(0.5 * (d[1:] + d[:-1]) * np.diff(z)))


def effective_sample_size(x: np.ndarray) -> float:
    """Geyer initial-positive-sequence estimate for a scalar chain."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 4 or np.var(x) == 0:
        return float(n)
    y = x - x.mean()
    f = np.fft.rfft(y, 2 * n)
    acf = np.fft.irfft(f * np.conj(f))[:n]
    acf /= acf[0]
    tau = 1.0
    for k in range(1, n // 2):
        pair = acf[2 * k - 1] + acf[2 * k]
        if pair <= 0:
            break
        tau += 2 * pair
    return float(n / tau)


# ---------------------------------------------------------------- two-matrix Gibbs sampler

@njit(cache=True)
def _delta_traces(A, A2, i, j, dre, dim, c1, c2, c3, c4):
    """Change of sum_k c_k tr A^k under A -> A + E (E = delta e_i e_j^* + h.c.)."""
    N = A.shape[0]
    if i == j:
        d = dre
        a = A[i, i].real
        a2 = A2[i, i].real
        a3 = 0.0
        for k in range(N):
            a3 += (A2[i, k] * A[k, i]).real
        t1 = d
        t2 = 2 * d * a + d * d
        t3 = 3 * d * a2 + 3 * d * d * a + d ** 3
        t4 = 4 * d * a3 + 4 * d * d * a2 + 2 * d * d * a * a + 4 * d ** 3 * a + d ** 4
        return c1 * t1 + c2 * t2 + c3 * t3 + c4 * t4
    dl = complex(dre, dim)
    m2 = dre * dre + dim * dim
    aji = A[j, i]
    a2ji = A2[j, i]
    a3ji = 0j
    for k in range(N):
        a3ji += A2[j, k] * A[k, i]
    t2 = 4 * (dl * aji).real + 2 * m2
    t3 = 6 * (dl * a2ji).real + 3 * m2 * (A[i, i].real + A[j, j].real)
    t4 = (8 * (dl * a3ji).real + 4 * m2 * (A2[i, i].real + A2[j, j].real)
          + 2 * (2 * A[i, i].real * A[j, j].real * m2 + 2 * ((aji * dl) ** 2).real)
          + 8 * m2 * (dl * aji).real + 2 * m2 * m2)
    return c2 * t2 + c3 * t3 + c4 * t4


@njit(cache=True)
def _apply(A, A2, i, j, dre, dim):
    N = A.shape[0]
    if i == j:
        d = dre
        for k in range(N):
            A2[k, i] += A[k, i] * d
        for k in range(N):
            A2[i, k] += d * A[i, k]
        A2[i, i] += d * d
        A[i, i] += d
        return
    dl = complex(dre, dim)
    dc = complex(dre, -dim)
    for k in range(N):
        A2[k, j] += A[k, i] * dl
        A2[k, i] += A[k, j] * dc
    for k in range(N):
        A2[i, k] += dl * A[j, k]
        A2[j, k] += dc * A[i, k]
    m2 = dre * dre + dim * dim
    A2[i, i] += m2
    A2[j, j] += m2
    A[i, j] += dl
    A[j, i] += dc


@njit(cache=True)
def _sweep(A, A2, B, coef, coupling, N, step, complex_entries):
    """One pass over the upper triangle. Returns the number of accepted moves."""
    acc = 0
    c1, c2, c3, c4 = coef[1], coef[2], coef[3], coef[4]
    for i in range(N):
        for j in range(i, N):
            if i == j:
                dre = step * np.random.standard_normal()
                dim = 0.0
                dcoup = dre * B[i, i].real
            else:
                if complex_entries:
                    dre = step * np.random.standard_normal() / np.sqrt(2.0)
                    dim = step * np.random.standard_normal() / np.sqrt(2.0)
                else:
                    dre = step * np.random.standard_normal()
                    dim = 0.0
                dcoup = 2.0 * (complex(dre, dim) * B[j, i]).real
            dE = N * (_delta_traces(A, A2, i, j, dre, dim, c1, c2, c3, c4) - coupling * dcoup)
            if dE <= 0.0 or np.random.random() < np.exp(-dE):
                _apply(A, A2, i, j, dre, dim)
                acc += 1
    return acc


@njit(cache=True)
def _seed_numba(seed):
    np.random.seed(seed)


@njit(cache=True)
def _gibbs_chain(A, B, coefA, coefB, coupling, complex_entries, burn_in, sweeps, thin,
                 stepA, stepB, target):
    N = A.shape[0]
    A2 = A @ A
    B2 = B @ B
    n_rec = sweeps // thin
    eig_a = np.empty((n_rec, N))
    eig_b = np.empty((n_rec, N))
    tr2 = np.empty(n_rec)
    n_prop = N * (N + 1) // 2
    acc_a = 0
    acc_b = 0
    rec = 0
    window_a = 0
    window_b = 0
    for s in range(burn_in + sweeps):
        aa = _sweep(A, A2, B, coefA, coupling, N, stepA, complex_entries)
        bb = _sweep(B, B2, A, coefB, coupling, N, stepB, complex_entries)
        A2 = A @ A
        B2 = B @ B
        if s < burn_in:
            window_a += aa
            window_b += bb
            if (s + 1) % 20 == 0:
                ra = window_a / (20.0 * n_prop)
                rb = window_b / (20.0 * n_prop)
                stepA *= np.exp(ra - target)
                stepB *= np.exp(rb - target)
                window_a = 0
                window_b = 0
        else:
            acc_a += aa
            acc_b += bb
            k = s - burn_in + 1
            if k % thin == 0 and rec < n_rec:
                eig_a[rec] = np.linalg.eigvalsh(A)
                eig_b[rec] = np.linalg.eigvalsh(B)
                tr2[rec] = np.trace(A2).real / N
                rec += 1
            if not np.isfinite(A2[0, 0].real) or abs(np.trace(A2).real) > 1e8 * N:
                return eig_a, eig_b, tr2, -1.0, -1.0, stepA, stepB
    total = float(sweeps) * n_prop
    return eig_a, eig_b, tr2, acc_a / total, acc_b / total, stepA, stepB


@dataclass
class GibbsResult:
    hist_a: Histogram
    hist_b: Histogram
    acceptance: tuple[float, float]
    step: tuple[float, float]
    ess: float
    sweeps: int
    N: int
    seed: int
    warnings: list = field(default_factory=list)

    def summary(self) -> dict:
        return {"acceptance": list(self.acceptance), "step": list(self.step), "ess": self.ess,
                "sweeps": self.sweeps, "N": self.N, "seed": self.seed,
                "n_samples": int(self.hist_a.samples.size), "warnings": self.warnings}


def _poly_coefficients(P) -> np.ndarray:
    c = np.zeros(5)
    coeffs = np.asarray(P.coeffs, dtype=float)
    if coeffs.size > 5:
        raise ValueError("the Gibbs sampler supports potentials of degree at most 4")
    c[: coeffs.size] = coeffs
    return c


def gibbs_two_matrix(spec, cfg: MCConfig | None = None, N: int = 24) -> GibbsResult:
    """Metropolis sampling of exp(c N tr(AB) - N tr P1(A) - N tr P2(B)).

    Entries are updated one at a time with Gaussian proposals in the
    symmetry class of ``spec.beta`` (real symmetric for 1, Hermitian for 2).
    Traces of powers up to four are updated in O(N) per move using a
    maintained A^2. Proposal scales are tuned toward ``cfg.target_accept``
    during burn-in.
    """
    cfg = cfg or MCConfig()
    if spec.kind != "ising":
        raise ValueError("the two-matrix sampler needs an Ising spec")
    if N < 2:
        raise ValueError("N must be at least 2")
    coefA = _poly_coefficients(spec.potentials[0])
    coefB = _poly_coefficients(spec.potentials[1])
    cplx = spec.beta == 2
    rng = np.random.default_rng(cfg.seed)
    _seed_numba(int(rng.integers(0, 2 ** 31 - 1)))
    A = np.zeros((N, N), dtype=np.complex128)
    B = np.zeros((N, N), dtype=np.complex128)
    step = cfg.step / math.sqrt(N)
    eig_a, eig_b, tr2, acc_a, acc_b, sa, sb = _gibbs_chain(
        A, B, coefA, coefB, float(cfg.coupling), cplx, cfg.burn_in, cfg.sweeps, cfg.thin,
        step, step, cfg.target_accept)
    if acc_a < 0:
        raise FloatingPointError("the chain diverged; the potentials may not confine")
    notes = []
    for name, acc in (("A", acc_a), ("B", acc_b)):
        if not 0.1 <= acc <= 0.7:
            msg = f"acceptance rate of {name} is {acc:.2f}, outside [0.1, 0.7]"
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
            notes.append(msg)
    lo = float(min(eig_a.min(), eig_b.min()))
    hi = float(max(eig_a.max(), eig_b.max()))
    return GibbsResult(
        Histogram.from_samples(eig_a, cfg.bins, (lo, hi)),
        Histogram.from_samples(eig_b, cfg.bins, (lo, hi)),
        (float(acc_a), float(acc_b)), (float(sa), float(sb)),
        effective_sample_size(tr2), cfg.sweeps, N, cfg.seed, notes)


# ---------------------------------------------------------------- matrix bridges

@njit(cache=True)
def _tilted_chain(U, d, e, weight, n_burn, n_keep, gap, theta0, target, complex_entries):
    """Metropolis on U under exp(weight * sum_kl d_k e_l |U_kl|^2) by random row rotations."""
    N = U.shape[0]
    out = np.empty((n_keep, N, N), dtype=U.dtype)
    theta = theta0
    acc = 0
    prop = 0
    kept = 0
    n_sweeps = n_burn + n_keep * gap
    per_sweep = N * (N - 1) // 2
    new1 = np.empty(N, dtype=U.dtype)
    new2 = np.empty(N, dtype=U.dtype)
    for s in range(n_sweeps):
        for _ in range(per_sweep):
            k1 = np.random.randint(N)
            k2 = np.random.randint(N - 1)
            if k2 >= k1:
                k2 += 1
            ang = theta * np.random.standard_normal()
            c = np.cos(ang)
            sn = np.sin(ang)
            if complex_entries:
                ph = 2 * np.pi * np.random.random()
                s_ = complex(sn * np.cos(ph), sn * np.sin(ph))
            else:
                s_ = complex(sn, 0.0)
            dsum = 0.0
            for l in range(N):
                a = U[k1, l]
                b = U[k2, l]
                na = c * a - np.conj(s_) * b
                nb = s_ * a + c * b
                if not complex_entries:
                    na = na.real
                    nb = nb.real
                new1[l] = na
                new2[l] = nb
                dsum += e[l] * (abs(na) ** 2 - abs(a) ** 2)
            dE = weight * (d[k1] - d[k2]) * dsum
            prop += 1
            if dE >= 0.0 or np.random.random() < np.exp(dE):
                for l in range(N):
                    U[k1, l] = new1[l]
                    U[k2, l] = new2[l]
                acc += 1
        if s < n_burn and (s + 1) % 10 == 0:
            rate = acc / prop
            theta *= np.exp(rate - target)
            acc = 0
            prop = 0
        if s >= n_burn and (s - n_burn + 1) % gap == 0 and kept < n_keep:
            out[kept] = U
            kept += 1
    return out, theta


def tilted_unitaries(d: np.ndarray, e: np.ndarray, beta: int, n_keep: int, seed: int,
                     burn_in: int = 3000, gap: int = 50) -> np.ndarray:
    """Samples of U with density proportional to exp((beta/2) N tr(D U E U*)) under Haar measure.

    This is the law of the eigenvector matrix of the endpoint of a matrix
    Brownian motion started at D and conditioned to have spectrum E at time 1.
    """
    N = d.size
    rng = np.random.default_rng(seed)
    _seed_numba(int(rng.integers(0, 2 ** 31 - 1)))
    U0 = haar_matrices(rng, N, 1, beta)[0].astype(np.complex128)
    out, _ = _tilted_chain(U0, np.asarray(d, float), np.asarray(e, float), 0.5 * beta * N,
                           burn_in, n_keep, gap, 1.0 / N, 0.3, beta == 2)
    return out


def _gaussian_hermitian(rng: np.random.Generator, N: int, var: float, beta: int, size: int):
    """Matrices with E|H_ij|^2 = var / N off the diagonal (GUE or GOE scaling)."""
    if beta == 2:
        Z = rng.standard_normal((size, N, N)) + 1j * rng.standard_normal((size, N, N))
        H = 0.5 * (Z + np.conj(np.swapaxes(Z, 1, 2)))
    else:
        Z = rng.standard_normal((size, N, N))
        H = (Z + np.swapaxes(Z, 1, 2)) / np.sqrt(2.0)
    return H * np.sqrt(var / N)


@dataclass
class BridgeSamples:
    times: np.ndarray
    histograms: dict                # t -> Histogram of eigenvalues at time t
    coupling: str
    N: int
    n_paths: int
    seed: int


def matrix_bridge_sampler(mu0: GridMeasure, mu1: GridMeasure, N: int, t_list,
                          cfg: MCConfig | None = None, beta: int = 2,
                          coupling: str = "conditioned", n_paths: int = 40,
                          spectra: SpectrumPair | None = None,
                          tilt_burn_in: int = 1500, tilt_gap: int = 25) -> BridgeSamples:
    """Spectra of X_t = t X1 + (1 - t) X0 + (1 - t) Y_t along matrix Brownian bridges.

    X0 = diag(d) and X1 = U diag(e) U* with d, e the quantiles of mu0, mu1.
    Y_t = int_0^t (1 - s)^-1 dH_s has independent Gaussian increments of
    variance 1/(1 - t2) - 1/(1 - t1), so the times are sampled exactly.
    ``coupling="conditioned"`` draws U from the law of a Brownian motion from
    X0 conditioned on its endpoint spectrum; ``coupling="free"`` uses Haar U.
    The conditioned chain runs ``tilt_burn_in`` sweeps and keeps every
    ``tilt_gap``-th sweep.
    """
    cfg = cfg or MCConfig()
    times = np.sort(np.asarray(list(t_list), dtype=float))
    if np.any(times < 0) or np.any(times >= 1):
        raise ValueError("times must lie in [0, 1)")
    pair = spectra or SpectrumPair.from_measures(mu0, mu1, N)
    d, e = pair.d, pair.e
    rng = np.random.default_rng(cfg.seed)
    if coupling == "conditioned":
        Us = tilted_unitaries(d, e, beta, n_paths, int(rng.integers(0, 2 ** 63)),
                              burn_in=tilt_burn_in, gap=tilt_gap)
    elif coupling == "free":
        Us = haar_matrices(rng, N, n_paths, beta)
    else:
        raise ValueError("coupling must be 'conditioned' or 'free'")
    X0 = np.diag(d).astype(complex)
    eigs = {t: [] for t in times}
    for U in Us:
        X1 = (U * e[None, :]) @ np.conj(U.T)
        Y = np.zeros((N, N), dtype=complex)
        prev = 1.0
        for t in times:
            inc = 1.0 / (1.0 - t) - prev
            prev = 1.0 / (1.0 - t)
            if inc > 0:
                Y = Y + _gaussian_hermitian(rng, N, inc, beta, 1)[0]
            X = t * X1 + (1 - t) * X0 + (1 - t) * Y
            eigs[t].append(np.linalg.eigvalsh(0.5 * (X + np.conj(X.T))))
    lo = min(np.min(v) for v in eigs.values())
    hi = max(np.max(v) for v in eigs.values())
    hists = {float(t): Histogram.from_samples(np.concatenate(eigs[t]), cfg.bins, (lo, hi))
             for t in times}
    return BridgeSamples(times, hists, coupling, N, len(Us), cfg.seed)
