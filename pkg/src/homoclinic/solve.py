"""Constrained minimization and descent to critical points of the action.

Pipeline: build a one-loop initial guess that crosses the ray {k q : k > 1},
minimize the action over the discrete constraint class E_h (one node pinned
to the ray, ray coordinate clamped at k_min = 1 + eps_k), release the
constraint, then run monotone Armijo descent with whole-period translation
renormalization until the scaled gradient norm ||g||_2 / sqrt(h) drops
below tolerance.

The descent direction is the negative gradient, optionally preconditioned
by the inverse of the discrete H1 operator (tridiagonal solve per
component).  Preconditioning changes only the direction, never the
accepted-value bookkeeping: both paths produce monotone action sequences
and segment-feasible iterates.  It is on by default because it improves
conditioning by roughly the square of the node count per unit time; the
raw path is kept and tested for parity.

Every accepted iterate keeps segment clearance >= delta_seg; trial points
that would violate it (or park a node inside the guard ball around q) are
rejected during backtracking, so the strong-force barrier is never crossed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import LinAlgError, cho_solve_banded, cholesky_banded, solve_banded

from .action import (
    ResidualReport,
    eval_action,
    grad_norm,
    ode_residual,
    positivity_probe,
    segment_clearance,
)
from .errors import (
    ConvergedToZero,
    InfeasibleGuess,
    MaxItersExceeded,
    NoSolutionFound,
)
from .grids import Grid, GridFunction, from_values, renormalize_translation
from .potential import (
    PotentialSpec,
    check_A,
    check_H2,
    check_H3,
    check_H4,
    default_witness,
    eval_W,
    eval_a,
    eval_gradW,
    eval_hessW,
)

Array = np.ndarray


@dataclass
class SolverConfig:
    grad_tol: float = 1e-6
    max_iters: int = 20000
    armijo_c1: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 60
    eps_k: float = 0.1
    renormalize_every: int = 25
    k0: float = 1.5
    bump_center: float = 0.0
    bump_width: float = 2.0
    transverse: float = 0.5
    orientation: int = 1
    precondition: bool = True
    seed: int = 0
    max_restarts: int = 4
    zero_tol: float = 1e-4
    constraint_active_iters: int = 50
    probe_radius: float = 1.0
    probe_samples: int = 200
    polish_steps: int = 12

    @property
    def k_min(self) -> float:
        return 1.0 + self.eps_k


@dataclass
class ConstraintE:
    """One node pinned to the ray {k q : k >= k_min}."""

    node_index: int
    k_min: float
    k: float


@dataclass
class EStageResult:
    trajectory: GridFunction
    k: float
    value: float
    grad_norm: float
    iterations: int
    converged: bool
    constraint_active: bool
    history: dict = field(repr=False, compare=False, default_factory=dict)


@dataclass
class HomoclinicCandidate:
    trajectory: GridFunction
    action: float
    grad_norm: float
    residual: ResidualReport
    clearance: float
    crossing: Optional[tuple[int, float]]
    iterations: int
    alpha_gap: Optional[float] = None
    e_stage: Optional[dict] = None
    schedule_item: Optional[dict] = None
    history: dict = field(repr=False, compare=False, default_factory=dict)


class H1Preconditioner:
    """Solve (K + M) v = g per component on the interior nodes.

    K is the forward-difference stiffness (1/h) tridiag(-1, 2, -1), M the
    trapezoid mass h I; the factorization is computed once per grid.
    """

    def __init__(self, grid: Grid):
        n_int = grid.n - 2
        h = grid.h
        ab = np.zeros((2, n_int))
        ab[0, 1:] = -1.0 / h
        ab[1, :] = 2.0 / h + h
        self._cb = cholesky_banded(ab, lower=False)

    def apply(self, g: Array) -> Array:
        out = np.zeros_like(g)
        out[1:-1] = cho_solve_banded((self._cb, False), g[1:-1])
        return out


def _transverse_unit(q: Array) -> Array:
    """Deterministic unit vector orthogonal to q."""
    i = int(np.argmin(np.abs(q)))
    e = np.zeros_like(q)
    e[i] = 1.0
    qh = q / np.linalg.norm(q)
    p = e - (e @ qh) * qh
    return p / np.linalg.norm(p)


def snap_center(grid: Grid, center: float) -> int:
    """Nearest node index to a requested bump center."""
    i = int(round(center / grid.h)) + grid.center_index
    return min(max(i, 1), grid.n - 2)


def initial_guess_bump(
    grid: Grid,
    pot: PotentialSpec,
    k0: float,
    center: float = 0.0,
    width: float = 2.0,
    transverse: float = 0.5,
    orientation: int = 1,
    eps_k: float = 0.1,
) -> GridFunction:
    """One-loop guess hitting k0 * q at the center node.

    The radial sech profile alone would cross the singular point on its way
    out (every multiple c*q with c in (0, k0] lies on the path), so an
    antisymmetric transverse component tanh * sech is added: the path bows
    to one side before the center node, passes through k0 * q exactly, and
    returns on the other side, winding once around q.  orientation flips
    the winding sense.
    """
    if k0 < 1.0 + eps_k:
        raise ValueError("k0 must be at least 1 + eps_k")
    if width <= 0:
        raise ValueError("width must be positive")
    idx = snap_center(grid, center)
    tau = grid.times - grid.times[idx]
    sech = 1.0 / np.cosh(width * tau)
    swing = np.tanh(width * tau) * sech
    p_hat = _transverse_unit(pot.q)
    vals = k0 * np.outer(sech, pot.q) + (
        orientation * transverse * pot.well.q_norm
    ) * np.outer(swing, p_hat)
    u = from_values(grid, vals)
    clearance = segment_clearance(u.values, pot.q)
    if clearance < pot.delta_seg:
        raise InfeasibleGuess(
            "guess clearance %.3e below the %.3e floor" % (clearance, pot.delta_seg)
        )
    return u


def _light_eval(vals: Array, pot: PotentialSpec, a_nodes: Array, h: float):
    """Action value and clearance, or None when the point is not feasible."""
    d2 = np.sum((vals - pot.q) ** 2, axis=1)
    if d2.min() < (pot.eps_q * pot.eps_q) * 4.0:
        return None
    clearance = segment_clearance(vals, pot.q)
    if clearance < pot.delta_seg:
        return None
    w = eval_W(pot.well, vals)
    diffs = np.diff(vals, axis=0)
    kinetic = 0.5 * np.sum(diffs * diffs) / h
    aw = a_nodes * w
    potential = -h * (np.sum(aw) - 0.5 * (aw[0] + aw[-1]))
    return float(kinetic + potential), clearance


def _gradient(vals: Array, pot: PotentialSpec, a_nodes: Array, h: float) -> Array:
    gw = eval_gradW(pot.well, vals)
    g = np.zeros_like(vals)
    g[1:-1] = -(vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / h - h * (
        a_nodes[1:-1, None] * gw[1:-1]
    )
    return g


def _flat_threshold(value: float, dec: float) -> float:
    # near the floating-point floor of the action, fall back to plain
    # nonincrease instead of demanding an unresolvable decrement
    if -dec < 4.0 * np.finfo(float).eps * abs(value):
        return value
    return value + dec


def _newton_polish(
    grid: Grid,
    vals: Array,
    value: float,
    clearance: float,
    pot: PotentialSpec,
    a_nodes: Array,
    cfg: SolverConfig,
    history: dict,
):
    """Drive the interior stencil equations down by damped Newton steps.

    A value-monotone line search cannot certify progress once the
    remaining action improvement drops below one ulp of the action, which
    happens at gradient norms around 1e-6 on desk grids.  The stencil
    equations have no such floor, so each step solves the banded Jacobian
    system and is accepted only when the gradient norm decreases and the
    iterate stays feasible.  Returns the updated state; stops early on a
    singular Jacobian or when no damping factor helps.
    """
    h = grid.h
    n, d = vals.shape
    n_int = n - 2
    g = _gradient(vals, pot, a_nodes, h)
    gn = grad_norm(grid, g)
    eye = np.eye(d)
    for _ in range(cfg.polish_steps):
        if gn <= cfg.grad_tol:
            break
        blocks = (2.0 / h) * eye - h * (
            a_nodes[1:-1, None, None] * eval_hessW(pot.well, vals[1:-1])
        )
        ab = np.zeros((2 * d + 1, n_int * d))
        for c in range(d):
            for c2 in range(d):
                ab[d + c - c2, c2::d] = blocks[:, c, c2]
        ab[0, d:] = -1.0 / h
        ab[2 * d, : n_int * d - d] = -1.0 / h
        try:
            delta = solve_banded((d, d), ab, g[1:-1].reshape(-1))
        except LinAlgError:
            break
        dvals = delta.reshape(n_int, d)
        improved = False
        scale = 1.0
        for _ in range(8):
            trial = vals.copy()
            trial[1:-1] -= scale * dvals
            res = _light_eval(trial, pot, a_nodes, h)
            if res is not None:
                g_t = _gradient(trial, pot, a_nodes, h)
                gn_t = grad_norm(grid, g_t)
                if gn_t < gn:
                    vals, g, gn = trial, g_t, gn_t
                    value, clearance = res
                    improved = True
                    break
            scale *= 0.5
        if not improved:
            break
        history.setdefault("polish_grad_norm", []).append(float(gn))
        history.setdefault("polish_action", []).append(float(value))
    return vals, value, clearance, gn


def minimize_over_E(
    u0: GridFunction,
    constraint: ConstraintE,
    pot: PotentialSpec,
    cfg: SolverConfig,
) -> EStageResult:
    """Projected Armijo descent over the constraint class E_h.

    Free variables are all interior nodes except the pinned one plus the
    ray coordinate k; each trial step is projected back onto the ray (with
    k clamped at k_min) before the sufficient-decrease test, so every
    iterate lies in E_h exactly.  Returns the best iterate with flags when
    the iteration cap is hit; the infimum estimate is the final value.
    """
    grid = u0.grid
    h = grid.h
    j = constraint.node_index
    if not (0 < j < grid.n - 1):
        raise ValueError("constrained node must be interior")
    q = pot.q
    q2 = float(q @ q)
    k_min = constraint.k_min

    vals = np.array(u0.values, copy=True)
    k = max(float(constraint.k), k_min)
    vals[j] = k * q
    a_nodes = eval_a(pot.coeff, grid.times)
    first = _light_eval(vals, pot, a_nodes, h)
    if first is None:
        raise InfeasibleGuess("starting point of the constrained stage is infeasible")
    value, clearance = first

    pre = H1Preconditioner(grid) if cfg.precondition else None
    alpha = 1.0 if cfg.precondition else 0.25 * h
    alpha_cap = 8.0 if cfg.precondition else 0.6 * h

    history = {"action": [value], "clearance": [clearance], "k": [k]}
    active_run = 0
    constraint_active = False
    converged = False
    pg_norm = math.inf
    iters = 0

    for iters in range(1, cfg.max_iters + 1):
        g = _gradient(vals, pot, a_nodes, h)
        # projected gradient: at node j only the ray-tangential part counts,
        # and it is blocked when pushing k below the clamp
        pg = g.copy()
        tang = float(g[j] @ q) / q2
        if k <= k_min * (1.0 + 1e-12) and tang > 0.0:
            tang = 0.0
        pg[j] = tang * q
        pg_norm = grad_norm(grid, pg)
        if pg_norm <= cfg.grad_tol:
            converged = True
            break

        direction = pre.apply(g) if pre is not None else g
        accepted = False
        alpha_try = min(alpha * 2.0, alpha_cap)
        for _ in range(cfg.max_backtracks):
            trial = vals - alpha_try * direction
            k_t = max(k_min, float(trial[j] @ q) / q2)
            trial[j] = k_t * q
            trial[0] = 0.0
            trial[-1] = 0.0
            res = _light_eval(trial, pot, a_nodes, h)
            if res is not None:
                delta = trial - vals
                dec = cfg.armijo_c1 * float(np.sum(g * delta))
                if dec < 0.0 and res[0] <= _flat_threshold(value, dec):
                    accepted = True
                    break
            alpha_try *= cfg.backtrack
        if not accepted or np.array_equal(trial, vals):
            break  # stalled at the floating-point floor
        vals = trial
        value, clearance = res
        k = k_t
        alpha = alpha_try
        history["action"].append(value)
        history["clearance"].append(clearance)
        history["k"].append(k)
        if k <= k_min * (1.0 + 1e-12):
            active_run += 1
            if active_run >= cfg.constraint_active_iters:
                constraint_active = True
        else:
            active_run = 0

    return EStageResult(
        trajectory=GridFunction(grid, vals),
        k=float(k),
        value=float(value),
        grad_norm=float(pg_norm),
        iterations=iters,
        converged=converged,
        constraint_active=constraint_active,
        history=history,
    )


def _detect_crossing(u: GridFunction, pot: PotentialSpec) -> Optional[tuple[int, float]]:
    """Node sitting on the ray {k q : k > 1}, if any."""
    q = pot.q
    qn = pot.well.q_norm
    qh = q / qn
    along = u.values @ qh
    perp = u.values - np.outer(along, qh)
    perp_norm = np.sqrt(np.sum(perp * perp, axis=1))
    on_ray = (perp_norm <= 1e-8 * qn) & (along > qn)
    idx = np.nonzero(on_ray)[0]
    if len(idx) == 0:
        return None
    best = idx[np.argmin(perp_norm[idx])]
    return int(best), float(along[best] / qn)


def descend_to_critical(
    u0: GridFunction,
    pot: PotentialSpec,
    cfg: SolverConfig,
) -> HomoclinicCandidate:
    """Unconstrained monotone descent to a critical point.

    Applies whole-period renormalization every renormalize_every accepted
    steps (and once at the end), raises ConvergedToZero when the iterate
    collapses below zero_tol in sup norm, and MaxItersExceeded when the
    cap is reached; the best iterate rides along on the exception.
    """
    grid = u0.grid
    h = grid.h
    vals = np.array(u0.values, copy=True)
    a_nodes = eval_a(pot.coeff, grid.times)
    first = _light_eval(vals, pot, a_nodes, h)
    if first is None:
        raise InfeasibleGuess("starting point of descent is infeasible")
    value, clearance = first

    pre = H1Preconditioner(grid) if cfg.precondition else None
    alpha = 1.0 if cfg.precondition else 0.25 * h
    alpha_cap = 8.0 if cfg.precondition else 0.6 * h

    history = {"action": [value], "clearance": [clearance], "renorm": []}
    since_renorm = 0
    iters = 0
    gn = math.inf

    def renormalize_now():
        nonlocal vals, value, clearance
        u = GridFunction(grid, vals)
        shifted, l = renormalize_translation(u)
        if l != 0:
            res = _light_eval(np.array(shifted.values, copy=True), pot, a_nodes, h)
            if res is None:
                return  # shift would break feasibility; keep the iterate
            history["renorm"].append((value, res[0], l))
            vals = np.array(shifted.values, copy=True)
            value, clearance = res

    while iters < cfg.max_iters:
        g = _gradient(vals, pot, a_nodes, h)
        gn = grad_norm(grid, g)
        if gn <= cfg.grad_tol:
            if not cfg.renormalize_every:
                break
            before = vals
            renormalize_now()
            if vals is before:  # no shift happened, fully converged
                break
            g = _gradient(vals, pot, a_nodes, h)
            gn = grad_norm(grid, g)
            if gn <= cfg.grad_tol:
                break
        direction = pre.apply(g) if pre is not None else g
        gdotd = float(np.sum(g * direction))
        if gdotd <= 0.0:
            break
        accepted = False
        alpha_try = min(alpha * 2.0, alpha_cap)
        for _ in range(cfg.max_backtracks):
            trial = vals - alpha_try * direction
            res = _light_eval(trial, pot, a_nodes, h)
            if res is not None:
                dec = -cfg.armijo_c1 * alpha_try * gdotd
                if res[0] <= _flat_threshold(value, dec):
                    accepted = True
                    break
            alpha_try *= cfg.backtrack
        if not accepted or np.array_equal(trial, vals):
            break
        vals = trial
        value, clearance = res
        alpha = alpha_try
        iters += 1
        since_renorm += 1
        history["action"].append(value)
        history["clearance"].append(clearance)
        if float(np.sqrt(np.max(np.sum(vals * vals, axis=1)))) < cfg.zero_tol:
            raise ConvergedToZero("iterate collapsed onto the trivial solution")
        if cfg.renormalize_every and since_renorm >= cfg.renormalize_every:
            renormalize_now()
            since_renorm = 0

    if gn > cfg.grad_tol and cfg.polish_steps > 0:
        for _ in range(2):
            vals, value, clearance, gn = _newton_polish(
                grid, vals, value, clearance, pot, a_nodes, cfg, history
            )
            if float(np.sqrt(np.max(np.sum(vals * vals, axis=1)))) < cfg.zero_tol:
                raise ConvergedToZero("iterate collapsed onto the trivial solution")
            if gn > cfg.grad_tol or not cfg.renormalize_every:
                break
            before = vals
            renormalize_now()
            if vals is before:
                break
            gn = grad_norm(grid, _gradient(vals, pot, a_nodes, h))
            if gn <= cfg.grad_tol:
                break

    u = GridFunction(grid, vals)
    if gn > cfg.grad_tol:
        best = _wrap_candidate(u, pot, cfg, iters, history, verify=False)
        raise MaxItersExceeded(
            "gradient norm %.3e above tolerance %.3e after %d iterations"
            % (gn, cfg.grad_tol, iters),
            best=best,
        )
    return _wrap_candidate(u, pot, cfg, iters, history, verify=True)


def polish_to_critical(
    u0: GridFunction,
    pot: PotentialSpec,
    cfg: SolverConfig,
) -> HomoclinicCandidate:
    """Converge to the nearest critical point by damped Newton alone.

    Unlike descend_to_critical this never follows the action downhill, so
    a glued multibump guess is not dragged down the unwinding canyon that
    monotone descent finds when bump tails interact; acceptance is
    monotone in the gradient norm instead.  Raises MaxItersExceeded (best
    iterate attached) when the polish stalls above tolerance.
    """
    grid = u0.grid
    a_nodes = eval_a(pot.coeff, grid.times)
    vals = np.array(u0.values, copy=True)
    first = _light_eval(vals, pot, a_nodes, grid.h)
    if first is None:
        raise InfeasibleGuess("starting point of polish is infeasible")
    value, clearance = first
    history = {}
    vals, value, clearance, gn = _newton_polish(
        grid, vals, value, clearance, pot, a_nodes, cfg, history
    )
    if float(np.sqrt(np.max(np.sum(vals * vals, axis=1)))) < cfg.zero_tol:
        raise ConvergedToZero("polish collapsed onto the trivial solution")
    steps = len(history.get("polish_grad_norm", []))
    u = GridFunction(grid, vals)
    if gn > cfg.grad_tol:
        best = _wrap_candidate(u, pot, cfg, steps, history, verify=False)
        raise MaxItersExceeded(
            "polish stalled at gradient norm %.3e above tolerance %.3e" % (gn, cfg.grad_tol),
            best=best,
        )
    return _wrap_candidate(u, pot, cfg, steps, history, verify=True)


def _wrap_candidate(
    u: GridFunction,
    pot: PotentialSpec,
    cfg: SolverConfig,
    iters: int,
    history: dict,
    verify: bool,
) -> HomoclinicCandidate:
    ae = eval_action(u, pot)
    gn = grad_norm(u.grid, ae.gradient)
    res = ode_residual(u, pot)
    cand = HomoclinicCandidate(
        trajectory=u,
        action=float(ae.value),
        grad_norm=float(gn),
        residual=res,
        clearance=float(ae.min_seg_dist),
        crossing=_detect_crossing(u, pot),
        iterations=iters,
        history=history,
    )
    if verify:
        if cand.action <= 0.0:
            raise ConvergedToZero("converged point has nonpositive action")
        if cand.clearance < pot.delta_seg:
            raise InfeasibleGuess("converged point violates segment clearance")
    return cand


def _restart_schedule(grid: Grid, cfg: SolverConfig) -> list[dict]:
    t_half = grid.period / 2.0
    base = {
        "k0": cfg.k0,
        "center": cfg.bump_center,
        "width": cfg.bump_width,
        "orientation": cfg.orientation,
    }
    variations = [
        base,
        {**base, "orientation": -cfg.orientation},
        {**base, "k0": min(2.5, cfg.k0 * 1.25), "width": cfg.bump_width * 0.75},
        {**base, "center": cfg.bump_center + t_half},
        {**base, "k0": max(1.0 + cfg.eps_k, cfg.k0 * 0.85), "width": cfg.bump_width * 1.5},
    ]
    return variations[: max(1, cfg.max_restarts + 1)]


def solve_homoclinic(
    pot: PotentialSpec,
    grid: Grid,
    cfg: Optional[SolverConfig] = None,
) -> HomoclinicCandidate:
    """Full pipeline: hypothesis gate, constrained stage, release, descent.

    Retries over a small restart schedule of guess parameters; raises
    NoSolutionFound when every attempt fails.  The returned candidate
    carries the constrained-stage summary (infimum estimate d_h, final k,
    constraint-activity flag) and the sampled action gap alpha_gap.
    """
    if cfg is None:
        cfg = SolverConfig()
    check_A(pot.coeff)
    check_H2(pot.well)
    witness = default_witness(pot.well) if pot.well.form == "example" else None
    if witness is not None:
        check_H3(pot.well, witness)
        check_H4(pot.well, witness)

    failures = []
    for item in _restart_schedule(grid, cfg):
        try:
            guess = initial_guess_bump(
                grid,
                pot,
                k0=item["k0"],
                center=item["center"],
                width=item["width"],
                transverse=cfg.transverse,
                orientation=item["orientation"],
                eps_k=cfg.eps_k,
            )
            j = snap_center(grid, item["center"])
            constraint = ConstraintE(node_index=j, k_min=cfg.k_min, k=item["k0"])
            e_res = minimize_over_E(guess, constraint, pot, cfg)
            cand = descend_to_critical(e_res.trajectory, pot, cfg)
        except (InfeasibleGuess, ConvergedToZero, MaxItersExceeded) as exc:
            failures.append("%s: %s" % (type(exc).__name__, exc))
            continue
        probe = positivity_probe(
            pot,
            grid,
            radius=cfg.probe_radius,
            n_samples=cfg.probe_samples,
            rng=np.random.default_rng(cfg.seed),
        )
        cand.alpha_gap = probe.min_action
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
    raise NoSolutionFound(
        "all %d attempts failed: %s" % (len(failures), "; ".join(failures))
    )
