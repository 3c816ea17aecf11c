"""Shared builders for the test suite."""

import numpy as np

from isenbgk.diagnostics import DiagnosticsRecorder
from isenbgk.discretization import KineticField, SpatialGrid
from isenbgk.equilibrium import VelocityGrid, derive_params
from isenbgk.initial import build_initial
from isenbgk.perturbation import (
    build_basis,
    from_perturbation,
    perturbation_moments,
    remove_total_moments,
    to_perturbation,
)
from isenbgk.solver import SolverConfig, run


class RefSetup:
    """d=1, gamma=1.1, 512 velocity points: the reference configuration."""

    def __init__(self, points=512):
        self.params = derive_params(1.1, 1)
        self.vgrid = VelocityGrid(self.params, points)
        self.basis = build_basis(self.params, self.vgrid)
        self.weight = self.basis.weight


class DecayRun:
    """One decay experiment: density mode, zeroed perturbation moments."""

    def __init__(self, cells, points, amplitude=1e-3, t_end=30.0,
                 interval=0.25, order_max=2, track_entropy=False):
        self.params = derive_params(1.1, 1)
        self.vgrid = VelocityGrid(self.params, points)
        self.sgrid = SpatialGrid(1, cells)
        self.basis = build_basis(self.params, self.vgrid)
        self.weight = self.basis.weight

        field = build_initial(self.params, self.sgrid, self.vgrid,
                              "density_mode", amplitude=amplitude)
        f0, _ = to_perturbation(field.values, self.weight)
        f0 = remove_total_moments(f0, self.basis, self.sgrid.volume,
                                  self.sgrid.cell_volume)
        initial = KineticField(from_perturbation(f0, self.weight),
                               self.sgrid, self.vgrid)

        self.config = SolverConfig(
            t_end=t_end, output_interval=interval,
            track_relaxation_entropy=track_entropy,
        )
        self.recorder = DiagnosticsRecorder(
            self.params, self.basis, self.sgrid, order_max=order_max)
        self.pert_moments = []

        def track_pert(state):
            f, _ = to_perturbation(state.field.values, self.weight)
            mass, mom = perturbation_moments(
                f, self.weight, self.vgrid, self.sgrid.cell_volume)
            self.pert_moments.append((state.t, mass, mom))

        self.final = run(initial, self.params, self.config,
                         [self.recorder, track_pert])
        self.records = self.recorder.records

    @property
    def times(self):
        return np.array([r.t for r in self.records])

    @property
    def energies(self):
        return np.array([r.energy_total for r in self.records])
