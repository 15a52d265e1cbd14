"""Batch command line front end.

Subcommands: check (hypothesis table), solve (one candidate), search
(multi-solution library), refine (two-grid discretization study), diagnose
(inspect a trajectory CSV against a config and an existing library).

All outputs are deterministic for a fixed config and seed; wall-clock
timings are the only exception and live under the report's "timing" key so
consumers can strip them.  Exit codes: 0 success, 1 config or IO error,
2 hypothesis violation, 3 no (or not enough) solutions.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, replace
from typing import Optional

import numpy as np

from .action import (
    eval_action,
    grad_norm,
    ode_residual,
    truncation_residual,
)
from .config import (
    RunConfig,
    default_run_config,
    parse_config,
    read_config_doc,
)
from .errors import (
    ConfigError,
    HomoclinicError,
    HypothesisViolation,
    MaxItersExceeded,
    NoSolutionFound,
    TrajectoryFormatError,
    WindowOutOfDomain,
)
from .grids import (
    Grid,
    read_trajectory_csv,
    sobolev_bound_check,
    write_trajectory_csv,
)
from .multiplicity import (
    LibraryEntry,
    SolutionLibrary,
    ps_split,
    search_distinct,
)
from .potential import (
    check_A,
    check_H2,
    check_H3,
    check_H4,
    check_W_negativity,
    default_witness,
)
from .solve import solve_homoclinic


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def _write_json(path: str, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(doc), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _hypothesis_rows(cfg: RunConfig):
    """Run all hypothesis checks; never raises.  Returns (rows, reports, ok)."""
    pot = cfg.potential
    witness = default_witness(pot.well)
    checks = [
        ("A", "a(t) > 0 and periodic", lambda: check_A(pot.coeff)),
        ("H2", "negative pinched Hessian at 0", lambda: check_H2(pot.well)),
        ("H3", "strong-force barrier near q", lambda: check_H3(pot.well, witness)),
        ("H4", "far-field domination and growth", lambda: check_H4(pot.well, witness)),
        ("W<0", "W negative away from 0", lambda: check_W_negativity(pot.well)),
    ]
    rows = []
    reports = {}
    ok = True
    for name, description, run in checks:
        try:
            report = run()
            reports[name] = dict(asdict(report), passed=True)
            rows.append((name, "pass", description, _margin_text(name, report)))
        except HypothesisViolation as exc:
            reports[name] = {"passed": False, "error": str(exc)}
            rows.append((name, "FAIL", description, str(exc)))
            ok = False
    return rows, reports, ok


def _margin_text(name: str, report) -> str:
    if name == "A":
        return "a in [%.6g, %.6g]" % (report.min_a, report.max_a)
    if name == "H2":
        return "eigenvalues in [%.6g, %.6g]" % (report.eigen_min, report.eigen_max)
    if name == "H3":
        return "min margin %.3e inside radius %.3g" % (report.min_margin, report.radius)
    if name == "H4":
        return "min margin %.3e, min growth %.3e" % (report.min_margin, report.min_growth)
    return "max W %.3e" % report.max_w


def _print_check_table(rows):
    width = max(len(r[0]) for r in rows)
    for name, status, description, detail in rows:
        print("%-*s  %-4s  %s (%s)" % (width, name, status, description, detail))


def _candidate_summary(cand, csv_name: Optional[str]) -> dict:
    out = {
        "action": cand.action,
        "grad_norm": cand.grad_norm,
        "clearance": cand.clearance,
        "residual": asdict(cand.residual),
        "crossing": list(cand.crossing) if cand.crossing is not None else None,
        "iterations": cand.iterations,
        "alpha_gap": cand.alpha_gap,
        "e_stage": cand.e_stage,
        "schedule_item": cand.schedule_item,
    }
    if csv_name is not None:
        out["trajectory_csv"] = csv_name
    return out


def _gate(cfg: RunConfig) -> tuple:
    rows, reports, ok = _hypothesis_rows(cfg)
    if not ok:
        _print_check_table(rows)
        print("hypothesis checks failed", file=sys.stderr)
    return reports, ok


def cmd_check(cfg: RunConfig) -> int:
    rows, _, ok = _hypothesis_rows(cfg)
    _print_check_table(rows)
    return 0 if ok else 2


def cmd_solve(cfg: RunConfig) -> int:
    t0 = time.perf_counter()
    reports, ok = _gate(cfg)
    t_check = time.perf_counter() - t0
    if not ok:
        return 2
    os.makedirs(cfg.out_dir, exist_ok=True)
    report = {
        "command": "solve",
        "config": cfg.echo(),
        "hypotheses": reports,
    }
    t1 = time.perf_counter()
    try:
        cand = solve_homoclinic(cfg.potential, cfg.grid, cfg.solver)
    except (NoSolutionFound, MaxItersExceeded) as exc:
        report["error"] = "%s: %s" % (type(exc).__name__, exc)
        report["timing"] = {"checks": t_check, "solve": time.perf_counter() - t1}
        _write_json(os.path.join(cfg.out_dir, "report.json"), report)
        print("no solution found: %s" % exc, file=sys.stderr)
        return 3
    t_solve = time.perf_counter() - t1
    csv_name = "solution.csv"
    write_trajectory_csv(os.path.join(cfg.out_dir, csv_name), cand.trajectory)
    report["candidate"] = _candidate_summary(cand, csv_name)
    report["timing"] = {"checks": t_check, "solve": t_solve}
    _write_json(os.path.join(cfg.out_dir, "report.json"), report)
    e_iters = cand.e_stage["iterations"] if cand.e_stage else 0
    print(
        "solution: action %.6f, grad norm %.3e, clearance %.4f, %d + %d iterations"
        % (cand.action, cand.grad_norm, cand.clearance, e_iters, cand.iterations)
    )
    print("wrote %s and report.json in %s" % (csv_name, cfg.out_dir))
    return 0


def _entry_id(i: int) -> str:
    return "entry_%03d" % i


def _write_library(out_dir: str, lib: SolutionLibrary, seed: int) -> dict:
    manifest = []
    for i, entry in enumerate(lib.entries):
        eid = _entry_id(i)
        csv_name = eid + ".csv"
        write_trajectory_csv(os.path.join(out_dir, csv_name), entry.trajectory)
        manifest.append(
            {
                "id": eid,
                "action": entry.action,
                "grad_norm": entry.grad_norm,
                "clearance": entry.clearance,
                "trajectory_csv_path": csv_name,
                "seed": entry.seed if entry.seed is not None else seed,
                "schedule_item": entry.schedule_item,
            }
        )
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    dist = lib.distance_matrix()
    ids = [_entry_id(i) for i in range(len(lib.entries))]
    with open(os.path.join(out_dir, "distances.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(["id"] + ids) + "\n")
        for i, row_id in enumerate(ids):
            row = [row_id] + ["%.17g" % dist[i, j] for j in range(len(ids))]
            fh.write(",".join(row) + "\n")
    return {
        "entries": manifest,
        "distance_matrix_csv": "distances.csv",
        "log": lib.log,
    }


def cmd_search(cfg: RunConfig, jobs: int = 1) -> int:
    t0 = time.perf_counter()
    reports, ok = _gate(cfg)
    t_check = time.perf_counter() - t0
    if not ok:
        return 2
    os.makedirs(cfg.out_dir, exist_ok=True)
    t1 = time.perf_counter()
    lib = search_distinct(
        cfg.potential,
        cfg.grid,
        cfg.solver,
        targets=cfg.search.targets,
        eps_distinct=cfg.search.eps_distinct,
        schedule=cfg.search.schedule,
        jobs=jobs,
    )
    t_search = time.perf_counter() - t1
    library_doc = _write_library(cfg.out_dir, lib, cfg.seed)
    met = len(lib) >= cfg.search.targets
    report = {
        "command": "search",
        "config": cfg.echo(),
        "hypotheses": reports,
        "library": library_doc,
        "targets": cfg.search.targets,
        "targets_met": met,
        "timing": {"checks": t_check, "search": t_search},
    }
    _write_json(os.path.join(cfg.out_dir, "report.json"), report)
    print(
        "library: %d of %d targets, min pairwise distance %s"
        % (
            len(lib),
            cfg.search.targets,
            (
                "%.4f" % lib.distance_matrix()[np.triu_indices(len(lib), 1)].min()
                if len(lib) > 1
                else "n/a"
            ),
        )
    )
    print("wrote manifest.json, distances.csv and report.json in %s" % cfg.out_dir)
    if not met:
        print(
            "found %d candidates, wanted %d" % (len(lib), cfg.search.targets),
            file=sys.stderr,
        )
        return 3
    return 0


def cmd_refine(cfg: RunConfig) -> int:
    m_coarse = cfg.refine.m_coarse or cfg.grid.nodes_per_period
    m_fine = cfg.refine.m_fine or 2 * m_coarse
    if m_fine == m_coarse:
        raise ConfigError("refine: coarse and fine node counts are both %d" % m_coarse)
    t0 = time.perf_counter()
    reports, ok = _gate(cfg)
    t_check = time.perf_counter() - t0
    if not ok:
        return 2
    os.makedirs(cfg.out_dir, exist_ok=True)
    # the ratio needs residuals evaluated well below the h^2 truncation
    # signal, so the study always runs at a tight gradient tolerance
    solver = replace(cfg.solver, grad_tol=min(cfg.solver.grad_tol, 1e-8))
    levels = {}
    report = {
        "command": "refine",
        "config": cfg.echo(),
        "hypotheses": reports,
    }
    t1 = time.perf_counter()
    for label, m in (("coarse", m_coarse), ("fine", m_fine)):
        grid = Grid(
            period=cfg.grid.period, nodes_per_period=m, half_periods=cfg.grid.half_periods
        )
        try:
            cand = solve_homoclinic(cfg.potential, grid, solver)
        except (NoSolutionFound, MaxItersExceeded) as exc:
            report["error"] = "%s level (m=%d): %s: %s" % (
                label,
                m,
                type(exc).__name__,
                exc,
            )
            report["timing"] = {"checks": t_check, "solve": time.perf_counter() - t1}
            _write_json(os.path.join(cfg.out_dir, "report.json"), report)
            print(report["error"], file=sys.stderr)
            return 3
        csv_name = "solution_%s.csv" % label
        write_trajectory_csv(os.path.join(cfg.out_dir, csv_name), cand.trajectory)
        levels[label] = {
            "m": m,
            "action": cand.action,
            "grad_norm": cand.grad_norm,
            "truncation_residual": truncation_residual(cand.trajectory, cfg.potential),
            "stencil_residual": ode_residual(cand.trajectory, cfg.potential).sup_residual,
            "trajectory_csv": csv_name,
        }
    t_solve = time.perf_counter() - t1
    ratio = levels["coarse"]["truncation_residual"] / levels["fine"]["truncation_residual"]
    drift = abs(levels["fine"]["action"] - levels["coarse"]["action"]) / abs(
        levels["coarse"]["action"]
    )
    passed = 3.5 <= ratio <= 4.5 and drift <= 0.05
    report["refine"] = {
        "coarse": levels["coarse"],
        "fine": levels["fine"],
        "residual_ratio": ratio,
        "action_drift": drift,
        "grad_tol_used": solver.grad_tol,
        "passed": passed,
    }
    report["timing"] = {"checks": t_check, "solve": t_solve}
    _write_json(os.path.join(cfg.out_dir, "report.json"), report)
    print(
        "refine m=%d -> m=%d: residual ratio %.3f (want [3.5, 4.5]), action drift %.3e (want <= 5e-2)"
        % (m_coarse, m_fine, ratio, drift)
    )
    return 0 if passed else 3


def _load_library(out_dir: str, grid: Grid) -> Optional[SolutionLibrary]:
    path = os.path.join(out_dir, "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path, encoding="utf-8") as fh:
        manifest = json.load(fh)
    lib = SolutionLibrary()
    for item in manifest:
        u = read_trajectory_csv(os.path.join(out_dir, item["trajectory_csv_path"]), grid)
        lib.entries.append(
            LibraryEntry(
                trajectory=u,
                action=item["action"],
                grad_norm=item["grad_norm"],
                clearance=item["clearance"],
                seed=item.get("seed"),
                schedule_item=item.get("schedule_item"),
            )
        )
    return lib


def cmd_diagnose(cfg: RunConfig, trajectory_path: str) -> int:
    u = read_trajectory_csv(trajectory_path, cfg.grid)
    pot = cfg.potential
    ae = eval_action(u, pot)
    gn = grad_norm(u.grid, ae.gradient)
    res = ode_residual(u, pot)
    print("trajectory: %s" % trajectory_path)
    print("action          %.8f" % ae.value)
    print("grad norm       %.3e" % gn)
    print(
        "clearance       %.4e (floor %.4e, %s)"
        % (ae.min_seg_dist, pot.delta_seg, "feasible" if ae.feasible else "INFEASIBLE")
    )
    print("stencil residual %.3e" % res.sup_residual)
    print("tail sup |u|    %.3e   tail sup |du|  %.3e" % (res.tail_sup_u, res.tail_sup_du))
    grid = cfg.grid
    quarter = (grid.n - 1) // 4
    centers = [grid.times[quarter], grid.times[quarter * 2], grid.times[quarter * 5 // 2]]
    for s in centers:
        try:
            wb = sobolev_bound_check(u, float(s))
        except WindowOutOfDomain:
            continue
        print(
            "window bound at s=%+.3f: |u(s)| = %.4e <= %.4e %s"
            % (s, wb.lhs, wb.rhs, "ok" if wb.passed else "VIOLATED")
        )
    lib = _load_library(cfg.out_dir, cfg.grid)
    if lib is None or len(lib.entries) == 0:
        print("no library manifest in %s; skipping bump decomposition" % cfg.out_dir)
        return 0
    dec = ps_split(u, lib)
    print("bump decomposition: %d bumps, residual %.4e" % (len(dec.bumps), dec.residual_norm))
    for i, b in enumerate(dec.bumps):
        print(
            "  bump %d: window [%s, %s], matched %s shifted by %+d periods, distance %.4e"
            % (i, b.window[0], b.window[1], _entry_id(b.matched_index), b.shift, b.distance)
        )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    epilog = "default configuration:\n" + json.dumps(
        default_run_config().echo(), indent=2, sort_keys=True
    )
    parser = argparse.ArgumentParser(
        prog="homoclinic",
        description="Homoclinic orbits of singular periodic Hamiltonian systems.",
        epilog=epilog,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = [
        ("check", "validate the coefficient and potential hypotheses"),
        ("solve", "compute one homoclinic candidate"),
        ("search", "collect geometrically distinct candidates"),
        ("refine", "two-grid discretization-order study"),
        ("diagnose", "inspect a trajectory CSV"),
    ]
    for name, help_text in specs:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", metavar="PATH", help="JSON run configuration")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
        if name == "search":
            p.add_argument(
                "--jobs",
                type=int,
                default=1,
                metavar="N",
                help="parallel workers for the first search phase (default 1)",
            )
        if name == "diagnose":
            p.add_argument("trajectory", metavar="CSV", help="trajectory file to inspect")
    return parser


def main(argv: Optional[list] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        doc = read_config_doc(args.config) if args.config else {}
        cfg = parse_config(doc, seed_override=args.seed)
        out_dir = args.out or doc.get("out_dir") or os.environ.get("HOMOCLINIC_OUT") or "."
        cfg = replace(cfg, out_dir=out_dir)
        if args.command == "check":
            return cmd_check(cfg)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "search":
            return cmd_search(cfg, jobs=args.jobs)
        if args.command == "refine":
            return cmd_refine(cfg)
        return cmd_diagnose(cfg, args.trajectory)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 1
    except (TrajectoryFormatError, WindowOutOfDomain, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    except HypothesisViolation as exc:
        print("hypothesis violation: %s" % exc, file=sys.stderr)
        return 2
    except (NoSolutionFound, MaxItersExceeded) as exc:
        print("no solution: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
