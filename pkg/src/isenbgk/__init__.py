"""Discrete-velocity laboratory for a BGK-type relaxation model of
isentropic gas dynamics: simulation on a periodic torus, the weighted
perturbation framework around global equilibrium, and the measurement
suite for conservation, entropy, coercivity, decay rates, and the
hydrodynamic limit."""

__version__ = "0.1.0"

from .equilibrium import (
    GasParams,
    MacroState,
    VelocityGrid,
    derive_params,
    kinetic_entropy,
    maxwellian,
    moments,
)
from .discretization import KineticField, SpatialGrid
from .perturbation import (
    ProjectionBasis,
    build_basis,
    build_weight,
    from_perturbation,
    linear_op,
    macro_coeffs,
    nonlinear_op,
    project,
    to_perturbation,
)
from .solver import SolverConfig, SolverState, run
from .diagnostics import (
    DecayFit,
    DiagnosticsRecord,
    DiagnosticsRecorder,
    conservation_report,
    energy_functional,
    fit_decay,
)
from .euler_ref import EulerState, euler_step, kinetic_vs_euler_error, run_euler

__all__ = [
    "GasParams", "MacroState", "VelocityGrid", "derive_params",
    "kinetic_entropy", "maxwellian", "moments",
    "KineticField", "SpatialGrid",
    "ProjectionBasis", "build_basis", "build_weight", "from_perturbation",
    "linear_op", "macro_coeffs", "nonlinear_op", "project", "to_perturbation",
    "SolverConfig", "SolverState", "run",
    "DecayFit", "DiagnosticsRecord", "DiagnosticsRecorder",
    "conservation_report", "energy_functional", "fit_decay",
    "EulerState", "euler_step", "kinetic_vs_euler_error", "run_euler",
    "__version__",
]
