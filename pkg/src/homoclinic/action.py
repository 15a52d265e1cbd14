"""Discrete action functional, its gradient, and trajectory diagnostics.

The functional is

    I(u) = 1/2 int |u'|^2 - int a(t) W(u)

discretized with forward differences for u' and the trapezoid rule for the
potential term.  With that pairing the Euclidean gradient at an interior
node is the local stencil

    g_i = -(u_{i+1} - 2 u_i + u_{i-1}) / h - h a(t_i) grad W(u_i),

so a zero gradient is exactly a zero second-order finite-difference
residual of the equation of motion.  Boundary nodes are pinned and their
gradient rows are zeroed.

Feasibility is a segment test: the polyline through the nodes must keep
distance delta_seg = 1e-3 |q| from the singular point, so a trajectory
cannot tunnel through q between nodes.  Gradient norms are reported as
||g||_2 / sqrt(h), a mesh-independent proxy flagged in every report.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SingularityProximity
from .grids import Grid, GridFunction, h1_norm, random_smooth_function, sup_norm
from .potential import PotentialSpec, eval_a, eval_gradW, eval_W

Array = np.ndarray

GRAD_NORM_CONVENTION = "l2_over_sqrt_h"


@dataclass
class ActionEval:
    value: float
    gradient: Array  # (n, d), boundary rows zero
    min_seg_dist: float
    feasible: bool


def segment_clearance(values: Array, q: Array) -> float:
    """Min distance from q to the closed polyline through the node values."""
    p0 = values[:-1] - q
    p1 = values[1:] - q
    seg = p1 - p0
    denom = np.sum(seg * seg, axis=1)
    t = np.zeros_like(denom)
    np.divide(-np.sum(p0 * seg, axis=1), denom, out=t, where=denom > 0.0)
    np.clip(t, 0.0, 1.0, out=t)
    closest = p0 + t[:, None] * seg
    return float(np.sqrt(np.min(np.sum(closest * closest, axis=1))))


def singularity_clearance(u: GridFunction, pot: PotentialSpec) -> float:
    return segment_clearance(u.values, pot.q)


def _check_nodes_clear(values: Array, pot: PotentialSpec) -> None:
    d2 = np.sum((values - pot.q) ** 2, axis=1)
    if np.any(d2 < pot.eps_q * pot.eps_q):
        raise SingularityProximity(
            "a node is within the %.3e guard ball around q" % pot.eps_q
        )


def eval_action(u: GridFunction, pot: PotentialSpec) -> ActionEval:
    """Action value, Euclidean gradient and feasibility in one pass."""
    grid = u.grid
    v = u.values
    h = grid.h
    _check_nodes_clear(v, pot)

    t = grid.times
    a = eval_a(pot.coeff, t)
    w = eval_W(pot.well, v)
    gw = eval_gradW(pot.well, v)

    diffs = np.diff(v, axis=0)
    kinetic = 0.5 * np.sum(diffs * diffs) / h

    aw = a * w
    potential = -h * (np.sum(aw) - 0.5 * (aw[0] + aw[-1]))

    grad = np.zeros_like(v)
    grad[1:-1] = -(v[2:] - 2.0 * v[1:-1] + v[:-2]) / h - h * (
        a[1:-1, None] * gw[1:-1]
    )

    clearance = segment_clearance(v, pot.q)
    return ActionEval(
        value=float(kinetic + potential),
        gradient=grad,
        min_seg_dist=clearance,
        feasible=clearance >= pot.delta_seg,
    )


def grad_norm(grid: Grid, gradient: Array) -> float:
    """Mesh-scaled gradient norm ||g||_2 / sqrt(h)."""
    return float(np.linalg.norm(gradient) / np.sqrt(grid.h))


@dataclass
class FdCheckReport:
    max_rel_err: float
    n_directions: int
    step: float


def eval_gradient_fd_check(
    u: GridFunction,
    pot: PotentialSpec,
    step: Optional[float] = None,
    n_directions: int = 20,
    rng: Optional[np.random.Generator] = None,
) -> FdCheckReport:
    """Compare the analytic gradient with central differences of the value.

    Perturbs random interior coordinates one at a time.  Each error is
    taken relative to the larger of the two derivatives or the sampled
    gradient's euclidean norm: differencing the action value floors the
    absolute accuracy of every sampled derivative at roughly
    eps * |I(u)| / step, so a bare per-component quotient would report
    pure roundoff on entries far below the gradient's scale.  The same
    floor is kept at step * (1 + |I(u)|), which dominates both the
    roundoff and the O(step^2) truncation of the differences; without it
    a trajectory whose sampled gradient vanishes (the zero function, or a
    converged critical point) would divide method noise by itself.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    if step is None:
        step = 1e-6 * (1.0 + sup_norm(u))
    ae = eval_action(u, pot)
    g = ae.gradient
    n = u.grid.n
    d = u.d
    fd_samples = np.empty(n_directions)
    an_samples = np.empty(n_directions)
    for j in range(n_directions):
        i = int(rng.integers(1, n - 1))
        a = int(rng.integers(0, d))
        vp = np.array(u.values, copy=True)
        vp[i, a] += step
        vm = np.array(u.values, copy=True)
        vm[i, a] -= step
        fp = eval_action(GridFunction(u.grid, vp), pot).value
        fm = eval_action(GridFunction(u.grid, vm), pot).value
        fd_samples[j] = (fp - fm) / (2.0 * step)
        an_samples[j] = g[i, a]
    scale = float(np.linalg.norm(an_samples))
    if scale == 0.0 and not np.any(fd_samples):
        return FdCheckReport(max_rel_err=0.0, n_directions=n_directions, step=step)
    noise = step * (1.0 + abs(ae.value))
    denom = np.maximum(np.abs(an_samples), np.abs(fd_samples))
    denom = np.maximum(denom, max(scale, noise))
    rel = float(np.max(np.abs(fd_samples - an_samples) / denom))
    return FdCheckReport(max_rel_err=rel, n_directions=n_directions, step=step)


@dataclass
class ResidualReport:
    sup_residual: float
    tail_sup_u: float
    tail_sup_du: float


def _tail_mask(grid: Grid) -> Array:
    return np.abs(grid.times) >= grid.half_length - grid.period


def ode_residual(u: GridFunction, pot: PotentialSpec) -> ResidualReport:
    """Second-order stencil residual of u'' + a(t) grad W(u) = 0.

    At a converged critical point of the discrete action this is the
    (rescaled) gradient, so it measures solver tolerance, not the
    discretization error; see truncation_residual for the latter.
    Tail metrics cover |t| >= L - period.
    """
    grid = u.grid
    v = u.values
    h = grid.h
    _check_nodes_clear(v, pot)
    t = grid.times
    a = eval_a(pot.coeff, t)
    gw = eval_gradW(pot.well, v)
    res = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h) + a[1:-1, None] * gw[1:-1]
    sup_res = float(np.sqrt(np.max(np.sum(res * res, axis=1))))

    mask = _tail_mask(grid)
    norms = np.sqrt(np.sum(v * v, axis=1))
    tail_u = float(np.max(norms[mask]))
    dv = np.diff(v, axis=0) / h
    cell_mask = mask[:-1]  # cell labeled by its left node
    dn = np.sqrt(np.sum(dv * dv, axis=1))
    tail_du = float(np.max(dn[cell_mask]))
    return ResidualReport(sup_residual=sup_res, tail_sup_u=tail_u, tail_sup_du=tail_du)


def truncation_residual(u: GridFunction, pot: PotentialSpec) -> float:
    """Equation defect measured with a fourth-order second-difference stencil.

    Independent of the solver's own discretization: on a sequence of
    converged solutions it exposes the O(h^2) truncation error that the
    second-order stencil cannot see (refinement studies rely on this).
    Uses nodes at least two cells from the boundary.
    """
    grid = u.grid
    v = u.values
    h = grid.h
    _check_nodes_clear(v, pot)
    a = eval_a(pot.coeff, grid.times)
    gw = eval_gradW(pot.well, v)
    d2 = (
        -v[4:] + 16.0 * v[3:-1] - 30.0 * v[2:-2] + 16.0 * v[1:-3] - v[:-4]
    ) / (12.0 * h * h)
    res = d2 + a[2:-2, None] * gw[2:-2]
    return float(np.sqrt(np.max(np.sum(res * res, axis=1))))


@dataclass
class PositivityProbe:
    min_action: float
    radius: float
    n_samples: int


def positivity_probe(
    pot: PotentialSpec,
    grid: Grid,
    radius: float = 1.0,
    n_samples: int = 200,
    rng: Optional[np.random.Generator] = None,
) -> PositivityProbe:
    """Sampled lower bound for the action on the H1 sphere of given radius.

    Random smooth feasible trajectories are rescaled to h1_norm == radius;
    the reported minimum is the sampled action gap alpha_r.
    """
    if rng is None:
        rng = np.random.default_rng(3)
    best = np.inf
    for _ in range(n_samples):
        u = random_smooth_function(grid, pot.dimension, rng)
        nrm = h1_norm(u)
        if nrm == 0.0:
            continue
        vals = u.values * (radius / nrm)
        cand = GridFunction(grid, vals)
        ae = eval_action(cand, pot)
        if not ae.feasible:
            continue
        best = min(best, ae.value)
    return PositivityProbe(min_action=float(best), radius=radius, n_samples=n_samples)
