"""Matrix Brownian bridges between two spectra, conditioned versus free coupling."""

import argparse

from hcizflow.eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge
from hcizflow.measures import semicircle
from hcizflow.rmt import MCConfig, matrix_bridge_sampler, wasserstein_to_measure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=64)
    ap.add_argument("--paths", type=int, default=40)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
    times = (0.25, 0.5, 0.75)
    flow = solve_bridge(mu0, mu1, 2.0, SpaceTimeGrid(-3.5, 3.8, 64, 32), BridgeOptions(tol=1e-5)).flow
    for coupling in ("conditioned", "free"):
        s = matrix_bridge_sampler(mu0, mu1, args.N, times, MCConfig(seed=args.seed),
                                  coupling=coupling, n_paths=args.paths)
        w = [wasserstein_to_measure(s.histograms[t].samples, flow.marginal_at(t)) for t in times]
        print(f"{coupling:>11}: " + "  ".join(f"t={t}: W1={x:.4f}" for t, x in zip(times, w)))


if __name__ == "__main__":
    main()
