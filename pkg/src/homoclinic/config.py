"""Run configuration: JSON document loading, validation, and echo.

A run is described by one JSON object with blocks `potential`, `grid`,
`solver`, `search`, `refine` plus `out_dir` and `seed`; every field has a
default, so {} is a valid document.  Parsing either succeeds completely or
raises ConfigError naming the offending field (malformed JSON reports line
and column).  The resolved configuration echoes back to an equivalent
document via RunConfig.echo, and parsing that echo reproduces the same
resolved configuration, which is what makes reports reproducible from the
config they embed.

The CLI always works with the built-in potential family; custom callables
are a library-level feature and have no JSON spelling.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Optional

import numpy as np

from .errors import ConfigError
from .grids import Grid
from .potential import PotentialSpec, example_potential
from .solve import SolverConfig


@dataclass
class SearchConfig:
    targets: int = 3
    eps_distinct: float = 0.1
    schedule: Optional[dict] = None


@dataclass
class RefineConfig:
    m_coarse: Optional[int] = None
    m_fine: Optional[int] = None


@dataclass
class RunConfig:
    potential: PotentialSpec
    grid: Grid
    solver: SolverConfig
    search: SearchConfig
    refine: RefineConfig
    out_dir: str = "."
    seed: int = 0

    def echo(self) -> dict:
        """Round-trippable document: parse_config(echo()) resolves identically."""
        well = self.potential.well
        coeff = self.potential.coeff
        solver = {
            f.name: getattr(self.solver, f.name)
            for f in fields(SolverConfig)
            if f.name != "seed"
        }
        return {
            "potential": {
                "dimension": int(well.dimension),
                "q": [float(x) for x in well.q],
                "alpha": float(well.alpha),
                "a_base": float(coeff.a_base),
                "a_amp": float(coeff.a_amp),
                "period": float(coeff.period),
            },
            "grid": {
                "m": int(self.grid.nodes_per_period),
                "M": int(self.grid.half_periods),
                "T": float(self.grid.period),
            },
            "solver": solver,
            "search": {
                "targets": int(self.search.targets),
                "eps_distinct": float(self.search.eps_distinct),
                "schedule": self.search.schedule,
            },
            "refine": {
                "m_coarse": self.refine.m_coarse,
                "m_fine": self.refine.m_fine,
            },
            "out_dir": self.out_dir,
            "seed": int(self.seed),
        }


_SOLVER_INT_FIELDS = {
    "max_iters",
    "max_backtracks",
    "renormalize_every",
    "orientation",
    "max_restarts",
    "constraint_active_iters",
    "probe_samples",
    "polish_steps",
}
_SOLVER_BOOL_FIELDS = {"precondition"}
_SOLVER_FLOAT_FIELDS = {
    "grad_tol",
    "armijo_c1",
    "backtrack",
    "eps_k",
    "k0",
    "bump_center",
    "bump_width",
    "transverse",
    "zero_tol",
    "probe_radius",
}


def _require(cond: bool, where: str, msg: str):
    if not cond:
        raise ConfigError("%s: %s" % (where, msg))


def _as_int(value, where: str) -> int:
    _require(isinstance(value, int) and not isinstance(value, bool), where, "expected an integer")
    return value


def _as_float(value, where: str) -> float:
    _require(
        isinstance(value, (int, float)) and not isinstance(value, bool),
        where,
        "expected a number",
    )
    return float(value)


def _check_keys(block: dict, allowed, where: str):
    _require(isinstance(block, dict), where, "expected an object")
    for key in block:
        _require(key in allowed, "%s.%s" % (where, key), "unknown field")


def _parse_potential(block: dict) -> PotentialSpec:
    _check_keys(block, {"dimension", "q", "alpha", "a_base", "a_amp", "period"}, "potential")
    dim = _as_int(block.get("dimension", 2), "potential.dimension")
    alpha = _as_float(block.get("alpha", 2.0), "potential.alpha")
    a_base = _as_float(block.get("a_base", 2.0), "potential.a_base")
    a_amp = _as_float(block.get("a_amp", 1.0), "potential.a_amp")
    period = _as_float(block.get("period", 1.0), "potential.period")
    q = None
    if "q" in block:
        raw = block["q"]
        _require(isinstance(raw, list) and len(raw) > 0, "potential.q", "expected a nonempty array")
        q = np.array([_as_float(x, "potential.q") for x in raw])
    try:
        return example_potential(
            alpha=alpha, dimension=dim, a_base=a_base, a_amp=a_amp, period=period, q=q
        )
    except ValueError as exc:
        raise ConfigError("potential: %s" % exc) from exc


def _parse_grid(block: dict, period: float) -> Grid:
    _check_keys(block, {"m", "M", "T"}, "grid")
    m = _as_int(block.get("m", 40), "grid.m")
    big_m = _as_int(block.get("M", 8), "grid.M")
    if "T" in block:
        t = _as_float(block["T"], "grid.T")
        _require(
            t == period,
            "grid.T",
            "must equal potential.period (%r != %r)" % (t, period),
        )
    try:
        return Grid(period=period, nodes_per_period=m, half_periods=big_m)
    except ValueError as exc:
        raise ConfigError("grid: %s" % exc) from exc


def _parse_solver(block: dict, seed: int) -> SolverConfig:
    allowed = _SOLVER_INT_FIELDS | _SOLVER_BOOL_FIELDS | _SOLVER_FLOAT_FIELDS
    _require(isinstance(block, dict), "solver", "expected an object")
    for key in block:
        if key == "seed":
            raise ConfigError("solver.seed: set the top-level seed instead")
        _require(key in allowed, "solver.%s" % key, "unknown field")
    kwargs = {}
    for key, value in block.items():
        where = "solver.%s" % key
        if key in _SOLVER_INT_FIELDS:
            kwargs[key] = _as_int(value, where)
        elif key in _SOLVER_BOOL_FIELDS:
            _require(isinstance(value, bool), where, "expected true or false")
            kwargs[key] = value
        else:
            kwargs[key] = _as_float(value, where)
    return SolverConfig(seed=seed, **kwargs)


def _parse_search(block: dict) -> SearchConfig:
    _check_keys(block, {"targets", "eps_distinct", "schedule"}, "search")
    targets = _as_int(block.get("targets", 3), "search.targets")
    _require(targets >= 0, "search.targets", "must be nonnegative")
    eps = _as_float(block.get("eps_distinct", 0.1), "search.eps_distinct")
    _require(eps > 0, "search.eps_distinct", "must be positive")
    schedule = block.get("schedule")
    if schedule is not None:
        _check_keys(schedule, {"phase1", "separations", "backfill"}, "search.schedule")
        item_keys = {
            "phase1": {"k0", "orientation", "center", "width"},
            "backfill": {"k0", "orientation", "center", "width"},
        }
        for key, value in schedule.items():
            label = "search.schedule.%s" % key
            _require(isinstance(value, list), label, "expected an array")
            if key == "separations":
                schedule[key] = [_as_int(x, label) for x in value]
                continue
            for item in value:
                _require(isinstance(item, dict), label, "items must be objects")
                _check_keys(item, item_keys[key], label)
                for field, x in item.items():
                    if field == "orientation":
                        item[field] = _as_int(x, "%s.orientation" % label)
                    else:
                        item[field] = _as_float(x, "%s.%s" % (label, field))
    return SearchConfig(targets=targets, eps_distinct=eps, schedule=schedule)


def _parse_refine(block: dict) -> RefineConfig:
    _check_keys(block, {"m_coarse", "m_fine"}, "refine")
    out = {}
    for key in ("m_coarse", "m_fine"):
        value = block.get(key)
        out[key] = None if value is None else _as_int(value, "refine.%s" % key)
    if out["m_coarse"] is not None and out["m_coarse"] == out["m_fine"]:
        raise ConfigError("refine.m_fine: must differ from refine.m_coarse")
    return RefineConfig(**out)


def parse_config(doc: dict, seed_override: Optional[int] = None) -> RunConfig:
    """Resolve a JSON document to a RunConfig or raise ConfigError."""
    _check_keys(
        doc,
        {"potential", "grid", "solver", "search", "refine", "out_dir", "seed"},
        "config",
    )
    seed = _as_int(doc.get("seed", 0), "seed")
    if seed_override is not None:
        seed = seed_override
    potential = _parse_potential(doc.get("potential", {}))
    grid = _parse_grid(doc.get("grid", {}), potential.period)
    solver = _parse_solver(doc.get("solver", {}), seed)
    search = _parse_search(doc.get("search", {}))
    refine = _parse_refine(doc.get("refine", {}))
    out_dir = doc.get("out_dir", ".")
    _require(isinstance(out_dir, str), "out_dir", "expected a string")
    return RunConfig(
        potential=potential,
        grid=grid,
        solver=solver,
        search=search,
        refine=refine,
        out_dir=out_dir,
        seed=seed,
    )


def read_config_doc(path: str) -> dict:
    """Read a JSON config document, reporting malformed input by line/column."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(
            "%s: line %d column %d: %s" % (path, exc.lineno, exc.colno, exc.msg)
        ) from exc
    _require(isinstance(doc, dict), path, "top level must be a JSON object")
    return doc


def load_config(path: str, seed_override: Optional[int] = None) -> RunConfig:
    return parse_config(read_config_doc(path), seed_override=seed_override)


def default_run_config() -> RunConfig:
    return parse_config({})
