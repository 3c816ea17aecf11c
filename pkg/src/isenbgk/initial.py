"""Named initial-condition families.

Families are parameterized in the run configuration rather than by
arbitrary code:

    equilibrium         F = M0 everywhere
    density_mode        rho = 1 + A cos(k x_1), u = 0, equilibrium data
    velocity_mode       rho = 1, u = A sin(k x_1) e_1, equilibrium data
    basis_perturbation  f0 = A cos(k x_1) sum_i c_i e_i
    snapshot            restart from a snapshot file
"""

import numpy as np

from .discretization import KineticField, SpatialGrid, read_snapshot
from .equilibrium import GasParams, VelocityGrid, global_equilibrium, maxwellian
from .perturbation import ProjectionBasis, from_perturbation

FAMILIES = ("equilibrium", "density_mode", "velocity_mode", "basis_perturbation",
            "snapshot")


def _first_axis_coordinate(sgrid: SpatialGrid):
    shape = [1] * sgrid.dim
    shape[0] = sgrid.cells_per_axis
    return sgrid.axis.reshape(shape) * np.ones(sgrid.shape)


def build_initial(params: GasParams, sgrid: SpatialGrid, vgrid: VelocityGrid,
                  family: str, amplitude: float = 0.0, wavenumber: int = 1,
                  coefficients=None, basis: ProjectionBasis | None = None,
                  snapshot_path=None) -> KineticField:
    if family not in FAMILIES:
        raise ValueError(f"unknown initial-condition family {family!r}")

    if family == "snapshot":
        if snapshot_path is None:
            raise ValueError("snapshot family needs a snapshot path")
        field, _, _ = read_snapshot(snapshot_path, sgrid, vgrid)
        return field

    if family == "equilibrium":
        m0 = global_equilibrium(params, vgrid)
        values = np.broadcast_to(m0, sgrid.shape + (vgrid.n_nodes,)).copy()
        return KineticField(values, sgrid, vgrid)

    x1 = _first_axis_coordinate(sgrid)
    k = 2.0 * np.pi * wavenumber / sgrid.length

    if family == "density_mode":
        rho = 1.0 + amplitude * np.cos(k * x1)
        u = np.zeros(sgrid.shape + (params.dim,))
        values = maxwellian(params, rho, u, vgrid.nodes)
        return KineticField(values, sgrid, vgrid)

    if family == "velocity_mode":
        rho = np.ones(sgrid.shape)
        u = np.zeros(sgrid.shape + (params.dim,))
        u[..., 0] = amplitude * np.sin(k * x1)
        values = maxwellian(params, rho, u, vgrid.nodes)
        return KineticField(values, sgrid, vgrid)

    # basis_perturbation
    if basis is None:
        raise ValueError("basis_perturbation family needs the projection basis")
    if coefficients is None:
        coefficients = [1.0] + [0.0] * params.dim
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (params.dim + 1,):
        raise ValueError(
            f"basis_perturbation needs {params.dim + 1} coefficients, "
            f"got {coefficients.shape}"
        )
    profile = coefficients @ basis.vectors
    f0 = amplitude * np.cos(k * x1)[..., None] * profile
    values = from_perturbation(f0, basis.weight)
    return KineticField(values, sgrid, vgrid)
