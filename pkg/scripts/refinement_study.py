"""Convergence study: solve on a ladder of grids and tabulate the defect.

For each nodes-per-period value the solver runs to a tight gradient
tolerance, then the equation defect is measured with the fourth-order
stencil.  Successive ratios near 4 confirm the expected second-order
behavior of the discretization; the action column shows the level drift.

    python3 scripts/refinement_study.py --levels 20 40 80 160
"""

import argparse
import time
from dataclasses import replace

from homoclinic import (
    Grid,
    SolverConfig,
    example_potential,
    solve_homoclinic,
    truncation_residual,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--levels", type=int, nargs="+", default=[20, 40, 80, 160])
    ap.add_argument("--half-periods", type=int, default=8)
    ap.add_argument("--grad-tol", type=float, default=1e-8)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    pot = example_potential()
    cfg = SolverConfig(seed=args.seed, grad_tol=args.grad_tol)

    print("%6s %14s %12s %8s %12s %8s" % ("m", "action", "defect", "ratio", "grad_norm", "secs"))
    prev = None
    for m in args.levels:
        grid = Grid(period=1.0, nodes_per_period=m, half_periods=args.half_periods)
        t0 = time.perf_counter()
        cand = solve_homoclinic(pot, grid, replace(cfg))
        secs = time.perf_counter() - t0
        defect = truncation_residual(cand.trajectory, pot)
        ratio = "" if prev is None else "%8.3f" % (prev / defect)
        print(
            "%6d %14.8f %12.4e %8s %12.2e %8.2f"
            % (m, cand.action, defect, ratio, cand.grad_norm, secs)
        )
        prev = defect


if __name__ == "__main__":
    main()
