"""Time-periodic coefficients and singular wells, with hypothesis probes.

The systems studied here have the form

    u'' + a(t) * grad W(u) = 0,   u(t) in R^d,

where a is positive and T-periodic and W is a well that vanishes
quadratically at the origin and diverges to -infinity at a single point q
(a strong-force singularity).  The built-in family is

    W(u) = -|u|^2 * |u - q|^(-alpha),   alpha in [2, 4],

which is negative away from {0, q}, has Hessian -2|q|^(-alpha) I at the
origin, and admits logarithmic / power witnesses for the strong-force
inequalities near q and at infinity.

Structural conditions are validated by sampling probes (check_A, check_H2,
check_H3, check_H4, check_W_negativity) rather than at construction time so
that a deliberately broken spec can still be built and then diagnosed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import HypothesisViolation, SingularityHit

Array = np.ndarray


@dataclass(frozen=True)
class CoefficientSpec:
    """Cosine coefficient a(t) = a_base + a_amp * cos(2 pi t / period)."""

    a_base: float = 2.0
    a_amp: float = 1.0
    period: float = 1.0

    def __post_init__(self):
        if self.period <= 0:
            raise ValueError("period must be positive")

    @property
    def a0(self) -> float:
        """Lower envelope a_base - |a_amp|."""
        return self.a_base - abs(self.a_amp)

    @property
    def a_inf(self) -> float:
        """Upper envelope a_base + |a_amp|."""
        return self.a_base + abs(self.a_amp)


def eval_a(spec: CoefficientSpec, t):
    """Evaluate a(t) for scalar or array t."""
    t = np.asarray(t, dtype=float)
    return spec.a_base + spec.a_amp * np.cos(2.0 * np.pi * t / spec.period)


@dataclass
class SingularPotentialSpec:
    """A well W on R^d with a single strong-force singularity at q.

    form "example" uses the built-in family above; form "custom" takes
    evaluator callables.  Custom callables must accept arrays of points
    with the coordinate dimension on the trailing axis and return values
    with that axis contracted away.
    """

    dimension: int = 2
    q: Array = field(default_factory=lambda: np.array([2.0, 0.0]))
    alpha: float = 2.0
    form: str = "example"
    w_fn: Optional[Callable] = None
    grad_fn: Optional[Callable] = None
    hess_fn: Optional[Callable] = None

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.dimension < 2:
            raise ValueError("dimension must be at least 2")
        if self.q.shape != (self.dimension,):
            raise ValueError("q must be a point in R^dimension")
        if np.linalg.norm(self.q) == 0.0:
            raise ValueError("q must be distinct from the origin")
        if self.form == "example":
            if not (2.0 <= self.alpha <= 4.0):
                raise ValueError("alpha must lie in [2, 4]")
        elif self.form == "custom":
            if self.w_fn is None or self.grad_fn is None:
                raise ValueError("custom form needs w_fn and grad_fn")
        else:
            raise ValueError("form must be 'example' or 'custom'")

    @property
    def q_norm(self) -> float:
        return float(np.linalg.norm(self.q))

    @property
    def eps_q(self) -> float:
        """Guard radius around q below which evaluations refuse to run."""
        return 1e-9 * self.q_norm


def _dist_to_q(spec: SingularPotentialSpec, u: Array) -> Array:
    return np.sqrt(np.sum((u - spec.q) ** 2, axis=-1))


def _guard(spec: SingularPotentialSpec, u: Array) -> Array:
    s = _dist_to_q(spec, u)
    if np.any(s < spec.eps_q):
        raise SingularityHit(
            "evaluation within %.3e of the singular point" % spec.eps_q
        )
    return s


def eval_W(spec: SingularPotentialSpec, u):
    """Evaluate W at one point (d,) or a batch (..., d) of points."""
    u = np.asarray(u, dtype=float)
    s = _guard(spec, u)
    if spec.form == "custom":
        return np.asarray(spec.w_fn(u), dtype=float)
    r2 = np.sum(u * u, axis=-1)
    return -r2 * s ** (-spec.alpha)


def eval_gradW(spec: SingularPotentialSpec, u):
    """Evaluate grad W; same batching convention as eval_W."""
    u = np.asarray(u, dtype=float)
    s = _guard(spec, u)
    if spec.form == "custom":
        return np.asarray(spec.grad_fn(u), dtype=float)
    r2 = np.sum(u * u, axis=-1)
    sa = s ** (-spec.alpha)
    # W = -|u|^2 s^-alpha, so grad = -2u s^-alpha + alpha |u|^2 s^-(alpha+2) (u-q)
    return -2.0 * u * sa[..., None] + (
        spec.alpha * r2 * s ** (-spec.alpha - 2.0)
    )[..., None] * (u - spec.q)


def eval_hessW(spec: SingularPotentialSpec, u):
    """Evaluate the Hessian of W, batched like eval_W with shape (..., d, d).

    Custom specs use hess_fn when given and otherwise central differences
    of grad_fn with a scale-aware step.
    """
    u = np.asarray(u, dtype=float)
    s = _guard(spec, u)
    if spec.form == "custom":
        if spec.hess_fn is not None:
            return np.asarray(spec.hess_fn(u), dtype=float)
        d = u.shape[-1]
        step = 1e-6 * (1.0 + np.sqrt(np.sum(u * u, axis=-1, keepdims=True)))
        cols = []
        for c in range(d):
            e = np.zeros(d)
            e[c] = 1.0
            gp = np.asarray(spec.grad_fn(u + step * e), dtype=float)
            gm = np.asarray(spec.grad_fn(u - step * e), dtype=float)
            cols.append((gp - gm) / (2.0 * step))
        hess = np.stack(cols, axis=-1)
        return 0.5 * (hess + np.swapaxes(hess, -1, -2))
    alpha = spec.alpha
    v = u - spec.q
    r2 = np.sum(u * u, axis=-1)
    sa = s ** (-alpha)
    sa2 = s ** (-alpha - 2.0)
    sa4 = s ** (-alpha - 4.0)
    eye = np.eye(u.shape[-1])
    uv = u[..., :, None] * v[..., None, :]
    hess = (
        (-2.0 * sa + alpha * r2 * sa2)[..., None, None] * eye
        + (2.0 * alpha * sa2)[..., None, None] * (uv + np.swapaxes(uv, -1, -2))
        - (alpha * (alpha + 2.0) * r2 * sa4)[..., None, None]
        * (v[..., :, None] * v[..., None, :])
    )
    return hess


@dataclass
class StrongForceWitness:
    """Witness functions for the singular barrier and the decay at infinity.

    U blows up at q and dominates W near q, U_inf grows without bound and
    dominates W outside |u| >= R0.  Gradients may be omitted, in which case
    the probes fall back to central differences (the witnesses are assumed
    continuously differentiable where the bounds are checked).
    """

    U: Callable
    r: float
    U_inf: Callable
    R0: float
    grad_U: Optional[Callable] = None
    grad_U_inf: Optional[Callable] = None


def default_witness(spec: SingularPotentialSpec) -> StrongForceWitness:
    """Closed-form witnesses for the example family.

    Near q:   U = ln|u-q|            for alpha = 2,
              U = |u-q|^(1-alpha/2)  for alpha > 2.
    At infinity: U_inf = c |u|^((4-alpha)/2) for alpha < 4, c ln|u| at 4.
    """
    q = spec.q
    alpha = spec.alpha

    def u_near(x):
        s = _dist_to_q(spec, x)
        if alpha == 2.0:
            return np.log(s)
        return s ** (1.0 - alpha / 2.0)

    def grad_u_near(x):
        d = x - q
        s = np.sqrt(np.sum(d * d, axis=-1))
        if alpha == 2.0:
            return d / (s * s)[..., None]
        beta = 1.0 - alpha / 2.0
        return beta * (s ** (beta - 2.0))[..., None] * d

    c_inf = 0.5

    def u_far(x):
        r = np.sqrt(np.sum(np.asarray(x, dtype=float) ** 2, axis=-1))
        if alpha == 4.0:
            return c_inf * np.log(r)
        return c_inf * r ** ((4.0 - alpha) / 2.0)

    def grad_u_far(x):
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        if alpha == 4.0:
            return c_inf * x / (r * r)[..., None]
        beta = (4.0 - alpha) / 2.0
        return c_inf * beta * (r ** (beta - 2.0))[..., None] * x

    return StrongForceWitness(
        U=u_near,
        r=0.1,
        U_inf=u_far,
        R0=4.0 * spec.q_norm,
        grad_U=grad_u_near,
        grad_U_inf=grad_u_far,
    )


@dataclass(frozen=True)
class CoefficientReport:
    min_a: float
    max_a: float
    n_samples: int


def check_A(spec: CoefficientSpec, n_samples: int = 2048) -> CoefficientReport:
    """Sample a(t) over one period and verify strict positivity."""
    t = np.linspace(0.0, spec.period, n_samples, endpoint=False)
    vals = eval_a(spec, t)
    report = CoefficientReport(float(vals.min()), float(vals.max()), n_samples)
    if report.min_a <= 0.0:
        raise HypothesisViolation(
            "coefficient a(t) is not positive: sampled min %.6g" % report.min_a
        )
    return report


@dataclass(frozen=True)
class PinchingReport:
    eigen_min: float
    eigen_max: float
    alpha0: float
    alpha1: float
    fd_step: float


def check_H2(spec: SingularPotentialSpec, fd_step: float = 1e-3) -> PinchingReport:
    """Finite-difference Hessian of W at the origin; all eigenvalues must be < 0.

    The Hessian is always finite-differenced, even when a closed form is
    known, so the probe exercises the same code path for every well.
    Reports alpha0 = -eigen_min and alpha1 = -eigen_max (the quadratic
    pinching constants).
    """
    d = spec.dimension
    h = fd_step
    hess = np.empty((d, d))
    eye = np.eye(d)
    for a in range(d):
        for b in range(a, d):
            if a == b:
                wp = eval_W(spec, h * eye[a])
                wm = eval_W(spec, -h * eye[a])
                w0 = eval_W(spec, np.zeros(d))
                hess[a, a] = (wp - 2.0 * w0 + wm) / (h * h)
            else:
                pp = eval_W(spec, h * (eye[a] + eye[b]))
                pm = eval_W(spec, h * (eye[a] - eye[b]))
                mp = eval_W(spec, h * (-eye[a] + eye[b]))
                mm = eval_W(spec, -h * (eye[a] + eye[b]))
                hess[a, b] = hess[b, a] = (pp - pm - mp + mm) / (4.0 * h * h)
    eigs = np.linalg.eigvalsh(hess)
    report = PinchingReport(
        eigen_min=float(eigs[0]),
        eigen_max=float(eigs[-1]),
        alpha0=-float(eigs[0]),
        alpha1=-float(eigs[-1]),
        fd_step=h,
    )
    if eigs[-1] >= 0.0:
        raise HypothesisViolation(
            "Hessian of W at 0 has a nonnegative eigenvalue %.6g" % eigs[-1]
        )
    return report


def _unit_sphere(rng: np.random.Generator, n: int, d: int) -> Array:
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _witness_grad(fn, grad_fn, pts, step_scale):
    if grad_fn is not None:
        return np.asarray(grad_fn(pts), dtype=float)
    # central differences, one coordinate at a time
    pts = np.asarray(pts, dtype=float)
    out = np.empty_like(pts)
    for a in range(pts.shape[-1]):
        e = np.zeros(pts.shape[-1])
        e[a] = 1.0
        hs = step_scale
        out[..., a] = (fn(pts + hs * e) - fn(pts - hs * e)) / (2.0 * hs)
    return out


@dataclass(frozen=True)
class BarrierReport:
    min_margin: float
    n_samples: int
    radius: float


def check_H3(
    spec: SingularPotentialSpec,
    witness: StrongForceWitness,
    n_samples: int = 256,
    rng: Optional[np.random.Generator] = None,
) -> BarrierReport:
    """Sampled strong-force inequality W(u) <= -|grad U(u)|^2 near q.

    Samples shells 0 < |u - q| <= r.  The shell radius must satisfy
    0 < r < |q|/2 so the shells stay away from the origin.
    """
    r = witness.r
    if not (0.0 < r < spec.q_norm / 2.0):
        raise ValueError("witness radius must satisfy 0 < r < |q|/2")
    if rng is None:
        rng = np.random.default_rng(0)
    n_radii = 16
    per_shell = max(1, n_samples // n_radii)
    radii = np.geomspace(1e-4 * r, r, n_radii)
    margin = np.inf
    for rho in radii:
        dirs = _unit_sphere(rng, per_shell, spec.dimension)
        pts = spec.q + rho * dirs
        w = eval_W(spec, pts)
        gu = _witness_grad(witness.U, witness.grad_U, pts, 1e-6 * rho)
        m = -w - np.sum(gu * gu, axis=-1)
        margin = min(margin, float(m.min()))
    report = BarrierReport(min_margin=margin, n_samples=n_radii * per_shell, radius=r)
    if margin < 0.0:
        raise HypothesisViolation(
            "strong-force barrier fails near q: min margin %.6g" % margin
        )
    return report


@dataclass(frozen=True)
class FarFieldReport:
    min_margin: float
    min_growth: float
    n_samples: int
    R0: float


def check_H4(
    spec: SingularPotentialSpec,
    witness: StrongForceWitness,
    n_samples: int = 256,
    rng: Optional[np.random.Generator] = None,
) -> FarFieldReport:
    """Sampled far-field inequality W <= -|grad U_inf|^2 plus a growth probe.

    The growth probe walks rays outward from |u| = R0 and requires |U_inf|
    to increase without leveling off (sampled surrogate for |U_inf| -> inf).
    """
    if rng is None:
        rng = np.random.default_rng(1)
    R0 = witness.R0
    n_radii = 16
    per_shell = max(1, n_samples // n_radii)
    radii = np.geomspace(R0, 64.0 * R0, n_radii)
    margin = np.inf
    growth = np.inf
    dirs = _unit_sphere(rng, per_shell, spec.dimension)
    prev_abs = None
    for rho in radii:
        pts = rho * dirs
        w = eval_W(spec, pts)
        gu = _witness_grad(witness.U_inf, witness.grad_U_inf, pts, 1e-6 * rho)
        m = -w - np.sum(gu * gu, axis=-1)
        margin = min(margin, float(m.min()))
        cur_abs = np.abs(np.asarray(witness.U_inf(pts), dtype=float))
        if prev_abs is not None:
            growth = min(growth, float((cur_abs - prev_abs).min()))
        prev_abs = cur_abs
    report = FarFieldReport(
        min_margin=margin,
        min_growth=growth,
        n_samples=n_radii * per_shell,
        R0=R0,
    )
    if margin < 0.0:
        raise HypothesisViolation(
            "far-field domination fails: min margin %.6g" % margin
        )
    if growth <= 0.0:
        raise HypothesisViolation(
            "far-field witness stops growing along some ray (min increment %.6g)"
            % growth
        )
    return report


@dataclass(frozen=True)
class NegativityReport:
    max_w: float
    n_samples: int


def check_W_negativity(
    spec: SingularPotentialSpec,
    n_samples: int = 512,
    rng: Optional[np.random.Generator] = None,
) -> NegativityReport:
    """Sample W away from {0, q} and verify strict negativity."""
    if rng is None:
        rng = np.random.default_rng(2)
    pts = rng.uniform(-4.0 * spec.q_norm, 4.0 * spec.q_norm, (n_samples, spec.dimension))
    keep = (np.linalg.norm(pts, axis=1) > 1e-6) & (
        _dist_to_q(spec, pts) > 10.0 * spec.eps_q
    )
    pts = pts[keep]
    vals = eval_W(spec, pts)
    report = NegativityReport(max_w=float(vals.max()), n_samples=int(len(pts)))
    if report.max_w >= 0.0:
        raise HypothesisViolation(
            "W is not negative away from 0 and q: sampled max %.6g" % report.max_w
        )
    return report


@dataclass
class PotentialSpec:
    """Bundle of coefficient and well defining V(t, u) = a(t) W(u)."""

    coeff: CoefficientSpec
    well: SingularPotentialSpec

    def a(self, t):
        return eval_a(self.coeff, t)

    def W(self, u):
        return eval_W(self.well, u)

    def gradW(self, u):
        return eval_gradW(self.well, u)

    @property
    def q(self) -> Array:
        return self.well.q

    @property
    def dimension(self) -> int:
        return self.well.dimension

    @property
    def period(self) -> float:
        return self.coeff.period

    @property
    def eps_q(self) -> float:
        return self.well.eps_q

    @property
    def delta_seg(self) -> float:
        """Segment clearance floor used by the feasibility test."""
        return 1e-3 * self.well.q_norm


def example_potential(
    alpha: float = 2.0,
    dimension: int = 2,
    a_base: float = 2.0,
    a_amp: float = 1.0,
    period: float = 1.0,
    q=None,
) -> PotentialSpec:
    """The default example system used across tests and the CLI."""
    if q is None:
        q = np.zeros(dimension)
        q[0] = 2.0
    well = SingularPotentialSpec(dimension=dimension, q=np.asarray(q, dtype=float), alpha=alpha)
    coeff = CoefficientSpec(a_base=a_base, a_amp=a_amp, period=period)
    return PotentialSpec(coeff=coeff, well=well)
