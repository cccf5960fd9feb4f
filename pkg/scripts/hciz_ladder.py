"""Print N^-2 log I_N along an N ladder next to the large-N limit from the bridge solver."""

import argparse

from hcizflow.eulerflow import BridgeOptions, SpaceTimeGrid, solve_bridge
from hcizflow.measures import semicircle
from hcizflow.rmt import SpectrumPair, hciz_exact


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, nargs="+", default=[8, 16, 32, 64, 128])
    ap.add_argument("--nx", type=int, default=128)
    ap.add_argument("--nt", type=int, default=64)
    args = ap.parse_args()

    mu0, mu1 = semicircle(1.0), semicircle(0.5, center=0.3)
    limit = solve_bridge(mu0, mu1, 2.0, SpaceTimeGrid(-3.5, 3.8, args.nx, args.nt),
                         BridgeOptions(tol=1e-5)).I
    print(f"solver limit I = {limit:.6f}")
    print(f"{'N':>5} {'N^-2 log I_N':>14} {'gap':>10}")
    for N in args.N:
        v = hciz_exact(SpectrumPair.from_measures(mu0, mu1, N))
        print(f"{N:5d} {v:14.6f} {abs(v - limit):10.2e}")


if __name__ == "__main__":
    main()
