"""Run configuration: flat JSON with dotted keys.

Unknown keys are rejected (typo safety) and every module's preconditions
are validated before any state is allocated.  `resolve` returns a plain
dict with defaults filled in; `build_problem` turns it into live objects.
"""

import json
import math
from dataclasses import dataclass

from .discretization import SpatialGrid
from .equilibrium import VelocityGrid, derive_params
from .errors import ConfigError
from .perturbation import build_basis, build_weight
from .solver import SolverConfig

_REQUIRED = object()

# key -> (type, default); list types are (list, element_type, default)
_SCHEMA = {
    "gas.gamma": (float, _REQUIRED),
    "gas.dim": (int, 1),
    "velocity.points": (int, 256),
    "velocity.margin": (float, 0.1),
    "space.cells": (int, 128),
    "space.length": (float, 2.0 * math.pi),
    "solver.t_end": (float, 1.0),
    "solver.cfl": (float, 0.5),
    "solver.epsilon": (float, 1.0),
    "solver.splitting": (str, "strang"),
    "solver.transport_scheme": (str, "muscl-minmod"),
    "solver.output_interval": (float, 0.25),
    "solver.envelope": (float, 0.5),
    "solver.track_relaxation_entropy": (bool, False),
    "solver.snapshot_interval": (float, 0.0),
    "initial.family": (str, "equilibrium"),
    "initial.amplitude": (float, 0.0),
    "initial.wavenumber": (int, 1),
    "initial.coefficients": (list, None),
    "initial.snapshot": (str, None),
    "perturbation.gram_tolerance": (float, 1e-6),
    "diagnostics.order": (int, 2),
    "diagnostics.stencil_order": (int, 2),
    "decay.fit_start": (float, 5.0),
    "decay.fit_end": (float, None),
    "hydro.epsilons": (list, (1e-1, 1e-2, 1e-3)),
    "hydro.t_end": (float, 0.2),
    "hydro.euler_refine": (int, 4),
    "hydro.euler_cfl": (float, 0.4),
    "run.seed": (int, 0),
    "run.threads": (int, 0),
}


def resolve(raw: dict) -> dict:
    """Fill defaults, coerce types, and reject unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a JSON object with dotted keys")
    unknown = sorted(set(raw) - set(_SCHEMA))
    if unknown:
        raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
    out = {}
    for key, (typ, default) in _SCHEMA.items():
        if key in raw:
            value = raw[key]
            if value is None and default is None:
                pass  # nullable key left unset
            elif typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
                value = float(value)
            elif typ is int and isinstance(value, int) and not isinstance(value, bool):
                value = int(value)
            elif typ is bool and isinstance(value, bool):
                pass
            elif typ is str and isinstance(value, str):
                pass
            elif typ is list and isinstance(value, (list, tuple)):
                value = list(value)
            else:
                raise ConfigError(
                    f"{key}: expected {typ.__name__}, got {type(value).__name__} "
                    f"({value!r})"
                )
            out[key] = value
        else:
            if default is _REQUIRED:
                raise ConfigError(f"{key}: required key missing")
            out[key] = list(default) if isinstance(default, tuple) else default
    return out


def load(path) -> dict:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return resolve(raw)


def dump(cfg: dict, path) -> None:
    """Serialize a resolved config; reloading it reproduces the run."""
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class Problem:
    """Live objects for one configured run."""

    cfg: dict
    params: object
    sgrid: SpatialGrid
    vgrid: VelocityGrid
    weight: object
    basis: object
    solver_config: SolverConfig

    @property
    def theory_range_ok(self) -> bool:
        """Whether (gamma, N) lies where the decay analysis is justified.

        The analysis needs n >= 4N + 6; outside that range runs proceed but
        the verify report flags it.
        """
        return self.params.exponent >= 4 * self.cfg["diagnostics.order"] + 6


def build_problem(cfg: dict, t_end: float | None = None,
                  epsilon: float | None = None) -> Problem:
    """Construct grids, weight, basis and solver config from a resolved dict."""
    try:
        params = derive_params(cfg["gas.gamma"], cfg["gas.dim"])
    except ValueError as exc:
        raise ConfigError(f"gas.gamma/gas.dim: {exc}") from exc
    try:
        vgrid = VelocityGrid(params, cfg["velocity.points"], cfg["velocity.margin"])
        sgrid = SpatialGrid(params.dim, cfg["space.cells"], cfg["space.length"])
    except ValueError as exc:
        raise ConfigError(f"grid configuration: {exc}") from exc
    weight = build_weight(params, vgrid)
    basis = build_basis(params, vgrid, cfg["perturbation.gram_tolerance"], weight)
    try:
        solver_config = SolverConfig(
            t_end=t_end if t_end is not None else cfg["solver.t_end"],
            cfl=cfg["solver.cfl"],
            epsilon=epsilon if epsilon is not None else cfg["solver.epsilon"],
            splitting=cfg["solver.splitting"],
            transport_scheme=cfg["solver.transport_scheme"],
            output_interval=cfg["solver.output_interval"],
            envelope=cfg["solver.envelope"],
            track_relaxation_entropy=cfg["solver.track_relaxation_entropy"],
        )
    except ValueError as exc:
        raise ConfigError(f"solver configuration: {exc}") from exc
    return Problem(cfg, params, sgrid, vgrid, weight, basis, solver_config)
