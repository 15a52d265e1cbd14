"""Multi-solution search and bump bookkeeping.

Solutions are identified modulo whole-period time shifts, so distinctness
is measured by the shift-quotient pseudo-metric: the minimum H1 distance
over all admissible integer-period shifts of either argument.  A
SolutionLibrary accepts a candidate only when it is farther than
eps_distinct from every stored entry under that metric.

multibump_guess glues shifted library entries into a multibump initial
condition when their numerical supports are cleanly separated; ps_split
goes the other way, cutting a trajectory into bump windows at valleys of
the node norm and matching each piece against the library.

search_distinct runs a deterministic three-phase schedule: single-loop
guesses with varied crossing height and winding sense, pairwise sums of
found solutions at decreasing separations, and a backfill sweep over bump
centers and widths.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .action import segment_clearance
from .errors import (
    HomoclinicError,
    InfeasibleGuess,
    OverlappingBumps,
)
from .grids import (
    Grid,
    GridFunction,
    from_values,
    h1_norm,
    shift_periods,
)
from .potential import (
    PotentialSpec,
    check_A,
    check_H2,
    check_H3,
    check_H4,
    default_witness,
)
from .solve import (
    HomoclinicCandidate,
    SolverConfig,
    descend_to_critical,
    initial_guess_bump,
    minimize_over_E,
    polish_to_critical,
    snap_center,
)
from .solve import ConstraintE

Array = np.ndarray


def _admissible_shifts(grid: Grid) -> range:
    k_max = (grid.n - 1) // grid.nodes_per_period
    return range(-k_max, k_max + 1)


def geometric_distance(u: GridFunction, v: GridFunction) -> float:
    """Shift-quotient pseudo-metric.

    min over admissible whole-period shifts k of ||u - shift(v, k)||_H1,
    symmetrized over the argument order.  Truncation at the domain ends
    makes a one-sided minimum slightly asymmetric; the symmetrization
    restores d(u, v) = d(v, u) exactly.
    """
    if u.grid != v.grid:
        raise ValueError("functions live on different grids")
    best = np.inf
    for k in _admissible_shifts(u.grid):
        dv = u.values - shift_periods(v, k).values
        best = min(best, h1_norm(from_values(u.grid, dv)))
        du = v.values - shift_periods(u, k).values
        best = min(best, h1_norm(from_values(u.grid, du)))
    return float(best)


def is_distinct(u: GridFunction, v: GridFunction, eps_distinct: float = 0.1) -> bool:
    return geometric_distance(u, v) > eps_distinct


@dataclass
class LibraryEntry:
    trajectory: GridFunction
    action: float
    grad_norm: float
    clearance: float
    seed: Optional[int] = None
    schedule_item: Optional[dict] = None


class SolutionLibrary:
    """Distinct solutions modulo whole-period shifts.

    try_insert applies the eps_distinct gate and records every decision in
    self.log, accepted or not, so a search run can be audited afterwards.
    """

    def __init__(self, eps_distinct: float = 0.1):
        self.eps_distinct = float(eps_distinct)
        self.entries: list[LibraryEntry] = []
        self.log: list[dict] = []

    def __len__(self) -> int:
        return len(self.entries)

    def min_distance_to(self, u: GridFunction) -> tuple[float, int]:
        """Smallest distance to a stored entry and its index; (inf, -1) when empty."""
        best, best_i = np.inf, -1
        for i, e in enumerate(self.entries):
            d = geometric_distance(u, e.trajectory)
            if d < best:
                best, best_i = d, i
        return float(best), best_i

    def try_insert_entry(self, entry: LibraryEntry, context: Optional[dict] = None) -> bool:
        d, i = self.min_distance_to(entry.trajectory)
        record = {
            "action": entry.action,
            "grad_norm": entry.grad_norm,
            "nearest_distance": d,
            "nearest_index": i,
            "schedule_item": entry.schedule_item,
        }
        if context:
            record.update(context)
        if d <= self.eps_distinct:
            record["outcome"] = "duplicate"
            self.log.append(record)
            return False
        record["outcome"] = "inserted"
        record["index"] = len(self.entries)
        self.entries.append(entry)
        self.log.append(record)
        return True

    def try_insert(
        self,
        cand: HomoclinicCandidate,
        seed: Optional[int] = None,
        context: Optional[dict] = None,
    ) -> bool:
        entry = LibraryEntry(
            trajectory=cand.trajectory,
            action=cand.action,
            grad_norm=cand.grad_norm,
            clearance=cand.clearance,
            seed=seed,
            schedule_item=cand.schedule_item,
        )
        return self.try_insert_entry(entry, context=context)

    def distance_matrix(self) -> Array:
        m = len(self.entries)
        out = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                d = geometric_distance(
                    self.entries[i].trajectory, self.entries[j].trajectory
                )
                out[i, j] = out[j, i] = d
        return out


def _support_interval(values: Array, threshold: float) -> Optional[tuple[int, int]]:
    norms = np.sqrt(np.sum(values * values, axis=1))
    idx = np.nonzero(norms > threshold)[0]
    if len(idx) == 0:
        return None
    return int(idx[0]), int(idx[-1])


def multibump_guess(
    entries: Sequence[GridFunction],
    shifts: Sequence[int],
    pot: PotentialSpec,
    support_threshold: float = 1e-6,
) -> GridFunction:
    """Sum of shifted entries with cleanly separated supports.

    The numerical support of each shifted entry (node norms above
    support_threshold) must be disjoint from the others with at least two
    coefficient periods of slack, otherwise OverlappingBumps is raised; a
    sum whose segment clearance dips below delta_seg raises
    InfeasibleGuess.  Entries with fat tails fail the support test by
    design: gluing those goes through direct sums plus descent instead.
    """
    if len(entries) != len(shifts):
        raise ValueError("entries and shifts must have equal length")
    if len(entries) == 0:
        raise ValueError("need at least one entry")
    grid = entries[0].grid
    for e in entries[1:]:
        if e.grid != grid:
            raise ValueError("entries live on different grids")
    min_gap_nodes = 2 * grid.nodes_per_period
    shifted = [shift_periods(e, int(k)) for e, k in zip(entries, shifts)]
    intervals = []
    for s in shifted:
        iv = _support_interval(s.values, support_threshold)
        if iv is None:
            raise ValueError("an entry has empty numerical support")
        intervals.append(iv)
    order = sorted(range(len(intervals)), key=lambda i: intervals[i][0])
    for a, b in zip(order[:-1], order[1:]):
        gap = intervals[b][0] - intervals[a][1]
        if gap < min_gap_nodes:
            raise OverlappingBumps(
                "supports separated by %d nodes, need %d" % (gap, min_gap_nodes)
            )
    total = np.zeros_like(shifted[0].values)
    for s in shifted:
        total += s.values
    u = from_values(grid, total)
    clearance = segment_clearance(u.values, pot.q)
    if clearance < pot.delta_seg:
        raise InfeasibleGuess(
            "glued guess clearance %.3e below %.3e" % (clearance, pot.delta_seg)
        )
    return u


def _runs(mask: Array) -> list[tuple[int, int]]:
    """Maximal runs of True, as inclusive (start, end) pairs."""
    idx = np.nonzero(mask)[0]
    if len(idx) == 0:
        return []
    breaks = np.nonzero(np.diff(idx) > 1)[0]
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(idx) - 1]))
    return [(int(idx[s]), int(idx[e])) for s, e in zip(starts, ends)]


@dataclass
class Bump:
    window: tuple[int, int]
    territory: tuple[int, int]
    function: GridFunction
    matched_index: int
    shift: int
    distance: float


@dataclass
class BumpDecomposition:
    bumps: list[Bump]
    residual_norm: float
    cut_indices: list[int] = field(default_factory=list)


def _best_match(
    piece: GridFunction, library: SolutionLibrary
) -> tuple[int, int, float]:
    best = (np.inf, -1, 0)
    for i, e in enumerate(library.entries):
        for k in _admissible_shifts(piece.grid):
            dv = piece.values - shift_periods(e.trajectory, k).values
            d = h1_norm(from_values(piece.grid, dv))
            if d < best[0]:
                best = (d, i, k)
    return best[1], best[2], float(best[0])


def ps_split(
    u: GridFunction,
    library: SolutionLibrary,
    delta_bump: float = 0.05,
    delta_gap: float = 0.01,
    taper_cells: int = 8,
) -> BumpDecomposition:
    """Cut a trajectory into bump pieces and match them to the library.

    Cores are maximal runs with node norm >= delta_bump; each core's
    window extends outward while the norm stays >= delta_gap.  Adjacent
    cores are separated by a cut at the valley argmin of the node norm
    between them, whether or not the valley dips below delta_gap, so two
    bumps glued at small separation still split.  Each piece owns the full
    territory up to its cuts (or the domain ends); at a cut with nonzero
    value a half-cosine taper over taper_cells keeps the piece in the
    zero-boundary class without a jump.  Pieces are matched to library
    entries by minimum H1 distance over whole-period shifts, and
    residual_norm is the H1 norm of u minus the sum of matched shifted
    entries.
    """
    if len(library.entries) == 0:
        raise ValueError("library is empty")
    grid = u.grid
    norms = np.sqrt(np.sum(u.values * u.values, axis=1))
    cores = _runs(norms >= delta_bump)
    if not cores:
        return BumpDecomposition(bumps=[], residual_norm=h1_norm(u))

    # valley cuts between consecutive cores
    cuts = []
    for (s0, e0), (s1, e1) in zip(cores[:-1], cores[1:]):
        inner = norms[e0 + 1 : s1]
        cuts.append(e0 + 1 + int(np.argmin(inner)))

    # gap-extended window per core, clipped to the core's territory
    bounds = [0] + [c + 1 for c in cuts] + [grid.n]
    gap_mask = norms >= delta_gap
    bumps = []
    recon = np.zeros_like(u.values)
    for i, (cs, ce) in enumerate(cores):
        lo, hi = bounds[i], bounds[i + 1] - 1
        ws = cs
        while ws > lo and gap_mask[ws - 1]:
            ws -= 1
        we = ce
        while we < hi and gap_mask[we + 1]:
            we += 1
        piece_vals = np.zeros_like(u.values)
        piece_vals[lo : hi + 1] = u.values[lo : hi + 1]
        if lo > 0 and norms[lo] > 0:
            ramp = min(taper_cells, hi + 1 - lo)
            w = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / max(ramp, 1)))
            piece_vals[lo : lo + ramp] *= w[:, None]
        if hi < grid.n - 1 and norms[hi] > 0:
            ramp = min(taper_cells, hi + 1 - lo)
            w = 0.5 * (1.0 - np.cos(np.pi * np.arange(ramp) / max(ramp, 1)))
            piece_vals[hi - ramp + 1 : hi + 1] *= w[::-1, None]
        piece = from_values(grid, piece_vals)
        m_idx, m_shift, m_dist = _best_match(piece, library)
        recon += shift_periods(library.entries[m_idx].trajectory, m_shift).values
        bumps.append(
            Bump(
                window=(ws, we),
                territory=(lo, hi),
                function=piece,
                matched_index=m_idx,
                shift=m_shift,
                distance=m_dist,
            )
        )
    residual = h1_norm(from_values(grid, u.values - recon))
    return BumpDecomposition(bumps=bumps, residual_norm=float(residual), cut_indices=cuts)


def _default_schedule(grid: Grid, cfg: SolverConfig) -> dict:
    t = grid.period
    return {
        "phase1": [
            {"k0": 1.5, "orientation": 1},
            {"k0": 1.5, "orientation": -1},
            {"k0": 2.0, "orientation": 1},
            {"k0": 2.0, "orientation": -1},
            {"k0": 1.2, "orientation": 1},
            {"k0": 1.2, "orientation": -1},
        ],
        "separations": [6, 5, 4],
        "backfill": [
            {"center": c * t, "width": w}
            for w in (2.0, 1.25)
            for c in (0.0, 0.25, 0.5, 0.75)
        ],
    }


def _attempt_item(
    pot: PotentialSpec, grid: Grid, cfg: SolverConfig, item: dict
) -> HomoclinicCandidate:
    center = float(item.get("center", cfg.bump_center))
    guess = initial_guess_bump(
        grid,
        pot,
        k0=float(item.get("k0", cfg.k0)),
        center=center,
        width=float(item.get("width", cfg.bump_width)),
        transverse=cfg.transverse,
        orientation=int(item.get("orientation", cfg.orientation)),
        eps_k=cfg.eps_k,
    )
    j = snap_center(grid, center)
    constraint = ConstraintE(
        node_index=j, k_min=cfg.k_min, k=float(item.get("k0", cfg.k0))
    )
    e_res = minimize_over_E(guess, constraint, pot, cfg)
    cand = descend_to_critical(e_res.trajectory, pot, cfg)
    cand.e_stage = {
        "value": e_res.value,
        "k": e_res.k,
        "iterations": e_res.iterations,
        "converged": e_res.converged,
        "constraint_active": e_res.constraint_active,
        "grad_norm": e_res.grad_norm,
    }
    cand.schedule_item = dict(item)
    return cand


def _phase1_worker(payload):
    pot, grid, cfg, item = payload
    try:
        return ("ok", _attempt_item(pot, grid, cfg, item), "")
    except HomoclinicError as exc:
        return ("fail", None, "%s: %s" % (type(exc).__name__, exc))


def _pair_guess(
    a: GridFunction, b: GridFunction, separation: int, pot: PotentialSpec
) -> GridFunction:
    left = shift_periods(a, -((separation + 1) // 2))
    right = shift_periods(b, separation // 2)
    u = from_values(a.grid, left.values + right.values)
    clearance = segment_clearance(u.values, pot.q)
    if clearance < pot.delta_seg:
        raise InfeasibleGuess("pair sum clearance %.3e" % clearance)
    return u


def search_distinct(
    pot: PotentialSpec,
    grid: Grid,
    cfg: Optional[SolverConfig] = None,
    targets: int = 3,
    eps_distinct: float = 0.1,
    schedule: Optional[dict] = None,
    jobs: int = 1,
) -> SolutionLibrary:
    """Deterministic multi-solution search.

    Phase 1 solves single-loop guesses over crossing heights and winding
    senses (parallelizable with jobs > 1; insertion order stays the
    schedule order, so results do not depend on completion timing).
    Phase 2 glues pairs of found solutions at decreasing separations and
    descends with renormalization off, so the two bumps keep their
    positions.  Phase 3 backfills with shifted and reshaped single-loop
    guesses.  Stops as soon as the library holds `targets` entries.
    """
    if cfg is None:
        cfg = SolverConfig()
    check_A(pot.coeff)
    check_H2(pot.well)
    if pot.well.form == "example":
        witness = default_witness(pot.well)
        check_H3(pot.well, witness)
        check_H4(pot.well, witness)

    sched = _default_schedule(grid, cfg)
    if schedule:
        sched.update(schedule)
    lib = SolutionLibrary(eps_distinct=eps_distinct)

    phase1 = [dict(item, phase=1) for item in sched["phase1"]]
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_phase1_worker, [(pot, grid, cfg, it) for it in phase1]))
    else:
        results = [_phase1_worker((pot, grid, cfg, it)) for it in phase1]
    for item, (status, cand, msg) in zip(phase1, results):
        if len(lib) >= targets:
            break
        if status != "ok":
            lib.log.append({"outcome": "failed", "schedule_item": item, "error": msg})
            continue
        lib.try_insert(cand, seed=cfg.seed, context={"phase": 1})
    if len(lib) >= targets:
        return lib

    # pair gluing converges with Newton polish alone: monotone action
    # descent from a glued sum slides down the unwinding canyon opened by
    # tail-core interaction, while the gradient-norm-monotone polish jumps
    # straight to the nearby multibump critical point
    pair_cfg = replace(cfg, polish_steps=max(40, cfg.polish_steps))
    base_entries = list(enumerate(lib.entries))
    pairs = [(0, 0)]
    if len(base_entries) >= 2:
        pairs.append((0, 1))
    for sep in sched["separations"]:
        if len(lib) >= targets or not base_entries:
            break
        for ia, ib in pairs:
            if len(lib) >= targets:
                break
            item = {"phase": 2, "separation": int(sep), "pair": [ia, ib]}
            try:
                guess = _pair_guess(
                    base_entries[ia][1].trajectory,
                    base_entries[ib][1].trajectory,
                    int(sep),
                    pot,
                )
                cand = polish_to_critical(guess, pot, pair_cfg)
                cand.schedule_item = item
            except HomoclinicError as exc:
                lib.log.append(
                    {
                        "outcome": "failed",
                        "schedule_item": item,
                        "error": "%s: %s" % (type(exc).__name__, exc),
                    }
                )
                continue
            lib.try_insert(cand, seed=cfg.seed, context={"phase": 2})
    if len(lib) >= targets:
        return lib

    for raw in sched["backfill"]:
        if len(lib) >= targets:
            break
        item = dict(raw, phase=3)
        item.setdefault("k0", 1.35)
        status, cand, msg = _phase1_worker((pot, grid, cfg, item))
        if status != "ok":
            lib.log.append({"outcome": "failed", "schedule_item": item, "error": msg})
            continue
        lib.try_insert(cand, seed=cfg.seed, context={"phase": 3})
    return lib
