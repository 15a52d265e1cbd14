"""Collect geometrically distinct homoclinic candidates and summarize them.

Runs the staged search on the example potential, prints one line per
library entry (action, gradient norm, clearance, provenance) and the
pairwise distance matrix, and optionally writes the trajectories as CSV.

    python3 scripts/find_solutions.py --targets 5 --out /tmp/library
"""

import argparse

import numpy as np

from homoclinic import (
    Grid,
    SolverConfig,
    example_potential,
    search_distinct,
    write_trajectory_csv,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--targets", type=int, default=3)
    ap.add_argument("--eps-distinct", type=float, default=0.1)
    ap.add_argument("--m", type=int, default=40, help="nodes per period")
    ap.add_argument("--half-periods", type=int, default=8)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", help="directory for trajectory CSVs")
    args = ap.parse_args()

    pot = example_potential()
    grid = Grid(period=1.0, nodes_per_period=args.m, half_periods=args.half_periods)
    cfg = SolverConfig(seed=args.seed)

    lib = search_distinct(
        pot, grid, cfg, targets=args.targets, eps_distinct=args.eps_distinct, jobs=args.jobs
    )

    print("found %d of %d requested candidates" % (len(lib), args.targets))
    for i, e in enumerate(lib.entries):
        print(
            "  %2d: action %10.6f  grad %.2e  clearance %.4f  via %s"
            % (i, e.action, e.grad_norm, e.clearance, e.schedule_item)
        )
    if len(lib) > 1:
        D = lib.distance_matrix()
        print("pairwise shift-minimized H1 distances:")
        for row in D:
            print("   " + "  ".join("%8.4f" % x for x in row))
        print("minimum: %.4f" % D[np.triu_indices(len(lib), 1)].min())

    attempts = sum(1 for r in lib.log if r["outcome"] in ("inserted", "duplicate", "failed"))
    dupes = sum(1 for r in lib.log if r["outcome"] == "duplicate")
    print("audit: %d attempts, %d duplicates rejected" % (attempts, dupes))

    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        for i, e in enumerate(lib.entries):
            path = os.path.join(args.out, "entry_%03d.csv" % i)
            write_trajectory_csv(path, e.trajectory)
            print("wrote %s" % path)


if __name__ == "__main__":
    main()
