"""Command line entry point: ``hcizflow <command> [options]``.

Every command writes ``summary.json`` plus CSV payloads into ``--out``.
Exit status is 0 on success, 2 when an invariant check fails and 1 on
errors such as unreadable inputs or a schema mismatch.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from pathlib import Path

SCHEMA_VERSION = 1
THREADS_ENV = "HCIZFLOW_THREADS"
COMMANDS = ("bridge", "onematrix", "ising", "chain", "potts", "qcd1", "hciz", "gibbs",
            "bridge-mc", "validate")

EXIT_OK, EXIT_ERROR, EXIT_INVARIANT = 0, 1, 2


class CliError(Exception):
    """A user-facing error; the message is printed and the exit status is 1."""


# ---------------------------------------------------------------- helpers

def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _existing(path: str | None, flag: str) -> Path:
    if path is None:
        raise CliError(f"missing required input {flag}")
    p = Path(path)
    if not p.is_file():
        raise CliError(f"input file not found for {flag}: {p}")
    return p


def _read_measure(path: str, flag: str):
    from .measures import read_measure_csv
    p = _existing(path, flag)
    try:
        return read_measure_csv(p)
    except ValueError as exc:
        raise CliError(f"could not read measure from {p}: {exc}") from exc


def _read_spec(path: str, kind: str):
    from .models import ModelSpec, SchemaMismatch
    p = _existing(path, "--spec")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{p} is not valid JSON: {exc}") from exc
    data.setdefault("kind", kind)
    if data["kind"] != kind:
        raise CliError(f"{p} describes a {data['kind']!r} model, not {kind!r}")
    try:
        return ModelSpec.from_dict(data)
    except SchemaMismatch as exc:
        raise CliError(f"schema mismatch in {p}: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid model spec in {p}: {exc}") from exc


def _check(name: str, invariant: str, value: float, threshold: float, sense: str = "<=") -> dict:
    passed = value <= threshold if sense == "<=" else value >= threshold
    return {"name": name, "invariant": invariant, "value": float(value),
            "threshold": float(threshold), "sense": sense, "passed": bool(passed)}


def _claim(value, *invariants: str) -> dict:
    return {"value": value, "checked_against": list(invariants)}


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])


def _write_histogram(path: Path, hist) -> None:
    _write_rows(path, ["bin_left", "bin_right", "mass"],
                ((float(a), float(b), float(m)) for a, b, m in
                 zip(hist.edges[:-1], hist.edges[1:], hist.mass)))


def _density_rows(measures: dict):
    """Long-format rows label,x,density for a dict label -> GridMeasure."""
    for label, mu in measures.items():
        for x, r in zip(mu.nodes, mu.density):
            yield (label, float(x), float(r))


def emit_report(out: Path, expected: list[str], densities: dict | None = None,
                residuals: list | None = None, ladder: list | None = None) -> list[str]:
    """Consolidated plot-ready CSVs next to the run artifacts.

    ``density_vs_x.csv`` has columns ``label,x,density`` where the label is a
    site name or a time; ``residual_vs_iteration.csv`` has
    ``iteration,quantity,value``; ``ladder.csv`` has ``N,value,reference,gap``.
    Raises :class:`CliError` naming every expected artifact that is missing.
    """
    missing = [name for name in expected if not (out / name).is_file()]
    if missing:
        raise CliError("missing artifacts: " + ", ".join(missing))
    written = []
    if densities:
        _write_rows(out / "density_vs_x.csv", ["label", "x", "density"], _density_rows(densities))
        written.append("density_vs_x.csv")
    if residuals:
        _write_rows(out / "residual_vs_iteration.csv", ["iteration", "quantity", "value"], residuals)
        written.append("residual_vs_iteration.csv")
    if ladder:
        _write_rows(out / "ladder.csv", ["N", "value", "reference", "gap"], ladder)
        written.append("ladder.csv")
    return written


def _bridge_residual_rows(result, prefix: str = ""):
    for h in result.history:
        yield (h["iter"], prefix + "rel_gap", float(h["rel_gap"]))
        yield (h["iter"], prefix + "continuity", float(h["residual"]))


def _finish(out: Path, command: str, config: dict, seed: int, results: dict, checks: list,
            artifacts: list[str], runtime: float) -> int:
    summary = {
        "command": command, "schema": SCHEMA_VERSION, "seed": seed,
        "config_hash": config_hash(config), "config": config,
        "results": results, "checks": checks, "artifacts": sorted(artifacts),
        "passed": all(c["passed"] for c in checks),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True, default=float) + "\n")
    # wall-clock time is kept apart so that summary.json is reproducible byte for byte
    (out / "timing.json").write_text(json.dumps({"runtime_s": runtime}) + "\n")
    for c in checks:
        status = "ok" if c["passed"] else "FAILED"
        print(f"{c['name']}: {c['value']:.3e} {c['sense']} {c['threshold']:.3e} [{status}]")
    return EXIT_OK if summary["passed"] else EXIT_INVARIANT


# ---------------------------------------------------------------- commands

def cmd_bridge(args, out: Path) -> int:
    from .eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge, write_flow_csv
    mu0 = _read_measure(args.mu0, "--mu0")
    mu1 = _read_measure(args.mu1, "--mu1")
    lo = min(mu0.support()[0], mu1.support()[0])
    hi = max(mu0.support()[1], mu1.support()[1])
    if args.span:
        grid = SpaceTimeGrid(args.span[0], args.span[1], args.nx, args.nt)
    else:
        grid = SpaceTimeGrid.around(lo, hi, args.nx, args.nt)
    config = {"mu0": Path(args.mu0).name, "mu1": Path(args.mu1).name, "beta": args.beta,
              "nx": args.nx, "nt": args.nt, "span": [grid.a, grid.b], "tol": args.tol,
              "mu0_sha": _file_hash(args.mu0), "mu1_sha": _file_hash(args.mu1)}
    t0 = time.perf_counter()
    r = solve_bridge(mu0, mu1, args.beta, grid,
                     BridgeOptions(tol=args.tol, max_iter=args.max_iter, raise_on_failure=False))
    write_flow_csv(r.flow, out / "flow.csv")
    checks = [
        _check("duality_gap", "eulerflow: relative duality gap <= tol", r.rel_gap, args.tol),
        _check("continuity", "eulerflow: relative continuity residual <= tol", r.residual, args.tol),
    ]
    results = {
        "J": _claim(r.J, "duality_gap", "continuity"),
        "I": _claim(r.I, "duality_gap", "continuity"),
        "gap": _claim(r.gap, "duality_gap"),
        "rel_gap": _claim(r.rel_gap, "duality_gap"),
        "action": _claim(r.action, "duality_gap"),
        "iterations": r.iterations, "converged": r.converged,
    }
    dens = {f"t={t:.6f}": r.flow.marginal(n) for n, t in enumerate(grid.t_centers)}
    art = ["flow.csv"] + emit_report(out, ["flow.csv"], densities=dens,
                                     residuals=list(_bridge_residual_rows(r)))
    return _finish(out, "bridge", config, 0, results, checks, art, time.perf_counter() - t0)


def _file_hash(path: str) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def cmd_onematrix(args, out: Path) -> int:
    from .measures import Grid, Polynomial, equilibrium_one_matrix, write_measure_csv
    try:
        P = Polynomial(tuple(float(c) for c in args.potential.split(",")))
    except ValueError as exc:
        raise CliError(f"--potential must be comma-separated coefficients: {exc}") from exc
    if not P.is_confining():
        raise CliError(f"potential {P.coeffs} is not confining")
    config = {"potential": list(P.coeffs), "beta": args.beta, "nodes": args.nodes,
              "span": list(args.span)}
    t0 = time.perf_counter()
    r = equilibrium_one_matrix(args.beta, P, Grid.uniform(args.span[0], args.span[1], args.nodes),
                               fit_support=True, dpotential=P.derivative())
    write_measure_csv(r.measure, out / "mu.csv")
    checks = [_check("stationarity", "measures: V' - beta H nu constant on the support",
                     r.residual, args.tol)]
    lo, hi = r.measure.support()
    results = {"energy": _claim(r.energy, "stationarity"),
               "support": _claim([lo, hi], "stationarity"),
               "iterations": r.iterations}
    art = ["mu.csv"] + emit_report(out, ["mu.csv"], densities={"mu": r.measure})
    return _finish(out, "onematrix", config, 0, results, checks, art, time.perf_counter() - t0)


SITE_NAMES = {"ising": ("A", "B")}


def cmd_model(args, out: Path) -> int:
    from .eulerflow import write_flow_csv
    from .measures import write_measure_csv
    from .models import ModelNotConverged, moment_ladder_residuals, solve_model
    spec = _read_spec(args.spec, args.command)
    t0 = time.perf_counter()
    try:
        r = solve_model(spec)
    except ModelNotConverged as exc:
        r = exc.result
    names = SITE_NAMES.get(spec.kind, tuple(str(i) for i in range(len(r.measures))))
    art = []
    for name, mu in zip(names, r.measures):
        write_measure_csv(mu, out / f"mu_{name}.csv")
        art.append(f"mu_{name}.csv")
    for k, f in enumerate(r.flows):
        fname = "flow.csv" if k == 0 else f"flow_{k}.csv"
        write_flow_csv(f.flow, out / fname)
        art.append(fname)
    sd = max(float(v.max()) for v in r.sd_residuals)
    checks = [
        _check("schwinger_dyson", "models: weak stationarity residuals over 10 Chebyshev tests",
               sd, args.sd_tol),
        _check("bridge_gap", "eulerflow: relative duality gap of every bond",
               max(f.rel_gap for f in r.flows), spec.solver.inner_tol * 10),
        _check("converged", "models: outer objective decrease below tolerance",
               0.0 if r.converged else 1.0, 0.0),
    ]
    results = {
        "free_energy": _claim(r.free_energy, "schwinger_dyson", "converged"),
        "free_energy_per_site": _claim(r.free_energy_per_site, "schwinger_dyson", "converged"),
        "free_energy_display": _claim(r.free_energy_display, "schwinger_dyson", "converged"),
        "objective": _claim(r.objective, "converged"),
        "label": r.label, "iterations": r.iterations,
    }
    if spec.kind == "ising":
        from .measures import l1_distance
        sym = _is_symmetric(spec)
        if sym:
            d = l1_distance(r.measures[0], r.measures[1])
            checks.append(_check("site_symmetry", "models: symmetric spec gives mu_A = mu_B", d, 1e-3))
            results["l1_A_B"] = _claim(d, "site_symmetry")
        if spec.beta == 2:
            ladder = moment_ladder_residuals(r)
            results["moment_ladder"] = _claim([float(v) for v in ladder], "schwinger_dyson")
    if spec.kind == "qcd1":
        checks.append(_check("antisymmetry", "models: ring velocities satisfy u0 = -u1",
                             r.antisymmetry, 1e-2))
        results["antisymmetry"] = _claim(r.antisymmetry, "antisymmetry")
    if r.alternatives:
        results["alternatives"] = [a["free_energy"] for a in r.alternatives]
    dens = {f"site_{n}": mu for n, mu in zip(names, r.measures)}
    rows = [(i, "objective", float(v)) for i, v in enumerate(r.objective_history)]
    art += emit_report(out, list(art), densities=dens, residuals=rows)
    return _finish(out, spec.kind, spec.to_dict(), spec.solver.seed, results, checks, art,
                   time.perf_counter() - t0)


def _is_symmetric(spec) -> bool:
    return len(spec.potentials) == 2 and spec.potentials[0] == spec.potentials[1]


def cmd_hciz(args, out: Path) -> int:
    from .eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge
    from .rmt import MCConfig, SpectrumPair, VarianceOverflowError, hciz_exact, hciz_mc
    mu0 = _read_measure(args.mu0, "--mu0")
    mu1 = _read_measure(args.mu1, "--mu1")
    Ns = sorted(set(args.N))
    config = {"mu0_sha": _file_hash(args.mu0), "mu1_sha": _file_hash(args.mu1), "N": Ns,
              "nx": args.nx, "nt": args.nt, "mc_samples": args.mc_samples, "seed": args.seed}
    t0 = time.perf_counter()
    values = [hciz_exact(SpectrumPair.from_measures(mu0, mu1, N)) for N in Ns]
    results = {"exact": {str(N): v for N, v in zip(Ns, values)}}
    checks = []
    ladder = []
    if args.nx > 0:
        lo = min(mu0.support()[0], mu1.support()[0])
        hi = max(mu0.support()[1], mu1.support()[1])
        r = solve_bridge(mu0, mu1, 2.0, SpaceTimeGrid.around(lo, hi, args.nx, args.nt),
                         BridgeOptions(tol=1e-5, raise_on_failure=False))
        gaps = [abs(v - r.I) for v in values]
        mono = all(b <= a for a, b in zip(gaps, gaps[1:]))
        checks.append(_check("ladder_monotone", "rmt: |N^-2 log I_N - I| nonincreasing in N",
                             0.0 if mono else 1.0, 0.0))
        checks.append(_check("ladder_final_gap", "rmt: final ladder gap <= 5e-2", gaps[-1], 5e-2))
        results["solver_I"] = _claim(r.I, "ladder_monotone", "ladder_final_gap")
        ladder = [(N, v, r.I, g) for N, v, g in zip(Ns, values, gaps)]
    else:
        ladder = [(N, v, "", "") for N, v in zip(Ns, values)]
    if args.mc_samples > 0:
        N = Ns[0]
        pair = SpectrumPair.from_measures(mu0, mu1, N)
        try:
            est = hciz_mc(pair, cfg=MCConfig(samples=args.mc_samples, seed=args.seed))
            z = abs(est.value - values[0]) / max(est.stderr, 1e-300)
            checks.append(_check("mc_agreement", f"rmt: hciz_mc within 3 stderr of hciz_exact at N={N}",
                                 z, 3.0))
            results["mc"] = _claim(json.loads(est.to_json()), "mc_agreement")
        except VarianceOverflowError as exc:
            results["mc"] = {"refused": str(exc)}
    art = emit_report(out, [], ladder=ladder)
    return _finish(out, "hciz", config, args.seed, results, checks, art, time.perf_counter() - t0)


def _mc_config(args, **extra):
    from .rmt import MCConfig
    return MCConfig(seed=args.seed, bins=args.bins, **extra)


def cmd_gibbs(args, out: Path) -> int:
    from .rmt import gibbs_two_matrix
    spec = _read_spec(args.spec, "ising")
    cfg = _mc_config(args, sweeps=args.sweeps, burn_in=args.burn_in, thin=args.thin,
                     coupling=args.coupling)
    config = {"spec": spec.to_dict(), "N": args.N, "sweeps": args.sweeps, "burn_in": args.burn_in,
              "thin": args.thin, "coupling": args.coupling, "bins": args.bins, "seed": args.seed}
    t0 = time.perf_counter()
    g = gibbs_two_matrix(spec, cfg, N=args.N)
    _write_histogram(out / "hist_A.csv", g.hist_a)
    _write_histogram(out / "hist_B.csv", g.hist_b)
    acc = min(g.acceptance), max(g.acceptance)
    checks = [_check("acceptance_low", "rmt: tuned acceptance >= 0.1", acc[0], 0.1, ">="),
              _check("acceptance_high", "rmt: tuned acceptance <= 0.7", acc[1], 0.7)]
    results = {"acceptance": _claim(list(g.acceptance), "acceptance_low", "acceptance_high"),
               "ess": g.ess, "n_samples": int(g.hist_a.samples.size), "warnings": g.warnings}
    art = ["hist_A.csv", "hist_B.csv"] + emit_report(
        out, ["hist_A.csv", "hist_B.csv"],
        densities={"A": g.hist_a.to_measure(), "B": g.hist_b.to_measure()})
    return _finish(out, "gibbs", config, args.seed, results, checks, art, time.perf_counter() - t0)


def cmd_bridge_mc(args, out: Path) -> int:
    from .eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge
    from .rmt import matrix_bridge_sampler, wasserstein_to_measure
    mu0 = _read_measure(args.mu0, "--mu0")
    mu1 = _read_measure(args.mu1, "--mu1")
    times = sorted(set(args.times))
    config = {"mu0_sha": _file_hash(args.mu0), "mu1_sha": _file_hash(args.mu1), "N": args.N,
              "times": times, "paths": args.paths, "coupling": args.coupling, "bins": args.bins,
              "nx": args.nx, "nt": args.nt, "seed": args.seed}
    t0 = time.perf_counter()
    s = matrix_bridge_sampler(mu0, mu1, args.N, times, _mc_config(args), coupling=args.coupling,
                              n_paths=args.paths)
    art = []
    for t in times:
        name = f"hist_t{t:.4f}.csv"
        _write_histogram(out / name, s.histograms[t])
        art.append(name)
    results, checks = {}, []
    if args.nx > 0:
        lo = min(mu0.support()[0], mu1.support()[0])
        hi = max(mu0.support()[1], mu1.support()[1])
        r = solve_bridge(mu0, mu1, 2.0, SpaceTimeGrid.around(lo, hi, args.nx, args.nt),
                         BridgeOptions(tol=1e-5, raise_on_failure=False))
        for t in times:
            w = wasserstein_to_measure(s.histograms[t].samples, r.flow.marginal_at(t))
            name = f"w1_t{t:.4f}"
            checks.append(_check(name, "rmt: bridge histogram vs solver marginal, W1 <= 0.1", w, 0.1))
            results[name] = _claim(w, name)
    dens = {f"t={t:.4f}": s.histograms[t].to_measure() for t in times}
    art += emit_report(out, list(art), densities=dens)
    return _finish(out, "bridge-mc", config, args.seed, results, checks, art, time.perf_counter() - t0)


def cmd_validate(args, out: Path) -> int:
    from .validation import SUITES, run_suite
    if args.suite not in SUITES:
        raise CliError(f"unknown suite {args.suite!r}; choose from {', '.join(sorted(SUITES))}")
    only = tuple(args.only) if args.only else None
    config = {"suite": args.suite, "only": list(only) if only else None, "seed": args.seed}
    t0 = time.perf_counter()
    res = run_suite(args.suite, seed=args.seed, report=print, only=only)
    checks = [{"name": f"criterion_{r.number}", "invariant": r.name, "value": r.value,
               "threshold": r.threshold, "sense": ">=" if r.number == 8 else "<=",
               "passed": r.passed} for r in res]
    _write_rows(out / "validation.csv", ["criterion", "name", "passed", "value", "threshold"],
                ((r.number, r.name, r.passed, float(r.value), float(r.threshold)) for r in res))
    results = {f"criterion_{r.number}": _claim(r.to_dict()["details"], f"criterion_{r.number}")
               for r in res}
    emit_report(out, ["validation.csv"])
    return _finish(out, "validate", config, args.seed, results, checks, ["validation.csv"],
                   time.perf_counter() - t0)


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hcizflow", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=None,
                   help=f"cap on worker threads (default: ${THREADS_ENV} or the library default)")
    sub = p.add_subparsers(dest="command", metavar="command")

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", default=".", help="output directory (created if needed)")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    b = add("bridge", "minimal-action bridge between two densities")
    b.add_argument("--mu0", required=True)
    b.add_argument("--mu1", required=True)
    b.add_argument("--beta", type=float, default=2.0)
    b.add_argument("--nx", type=int, default=128)
    b.add_argument("--nt", type=int, default=64)
    b.add_argument("--span", type=float, nargs=2, default=None)
    b.add_argument("--tol", type=float, default=1e-3)
    b.add_argument("--max-iter", type=int, default=50_000)

    o = add("onematrix", "equilibrium measure of a one-matrix potential")
    o.add_argument("--potential", required=True, help="coefficients c0,c1,... of V")
    o.add_argument("--beta", type=float, default=2.0)
    o.add_argument("--nodes", type=int, default=801)
    o.add_argument("--span", type=float, nargs=2, default=(-5.0, 5.0))
    o.add_argument("--tol", type=float, default=1e-6)

    for kind in ("ising", "chain", "potts", "qcd1"):
        m = add(kind, f"solve the {kind} matrix model")
        m.add_argument("--spec", required=True, help="model spec JSON")
        m.add_argument("--sd-tol", type=float, default=1e-2)

    h = add("hciz", "finite-N spherical integrals along an N ladder")
    h.add_argument("--mu0", required=True)
    h.add_argument("--mu1", required=True)
    h.add_argument("--N", type=int, nargs="+", default=[8, 16, 32, 64])
    h.add_argument("--nx", type=int, default=128, help="solver grid for the limit (0 skips it)")
    h.add_argument("--nt", type=int, default=64)
    h.add_argument("--mc-samples", type=int, default=0)

    g = add("gibbs", "Metropolis sampling of the two-matrix Ising measure")
    g.add_argument("--spec", required=True)
    g.add_argument("--N", type=int, default=24)
    g.add_argument("--sweeps", type=int, default=100_000)
    g.add_argument("--burn-in", type=int, default=5000)
    g.add_argument("--thin", type=int, default=50)
    g.add_argument("--coupling", type=float, default=1.0)
    g.add_argument("--bins", type=int, default=60)

    bm = add("bridge-mc", "spectra along matrix Brownian bridges")
    bm.add_argument("--mu0", required=True)
    bm.add_argument("--mu1", required=True)
    bm.add_argument("--N", type=int, default=64)
    bm.add_argument("--times", type=float, nargs="+", default=[0.25, 0.5, 0.75])
    bm.add_argument("--paths", type=int, default=40)
    bm.add_argument("--coupling", choices=("conditioned", "free"), default="conditioned")
    bm.add_argument("--bins", type=int, default=60)
    bm.add_argument("--nx", type=int, default=64, help="solver grid for comparison (0 skips it)")
    bm.add_argument("--nt", type=int, default=32)

    v = add("validate", "run the acceptance campaign")
    v.add_argument("--suite", default="core")
    v.add_argument("--only", type=int, nargs="+", default=None, help="criterion numbers")
    return p


HANDLERS = {"bridge": cmd_bridge, "onematrix": cmd_onematrix, "ising": cmd_model,
            "chain": cmd_model, "potts": cmd_model, "qcd1": cmd_model, "hciz": cmd_hciz,
            "gibbs": cmd_gibbs, "bridge-mc": cmd_bridge_mc, "validate": cmd_validate}


def apply_threads(n: int | None) -> int | None:
    """Cap BLAS and numba thread pools; ``None`` reads the environment default."""
    if n is None:
        env = os.environ.get(THREADS_ENV)
        n = int(env) if env else None
    if n is None:
        return None
    if n < 1:
        raise CliError("--threads must be at least 1")
    import numba
    from threadpoolctl import threadpool_limits
    os.environ["OMP_NUM_THREADS"] = str(n)
    threadpool_limits(limits=n)
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"error: unknown command {argv[0]!r}; expected one of {', '.join(COMMANDS)}",
              file=sys.stderr)
        return EXIT_ERROR
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_ERROR
    try:
        apply_threads(args.threads)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # any library failure is an error exit, not a traceback
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
