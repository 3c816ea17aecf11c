"""Finite-volume reference solver for the limiting isentropic Euler system.

Conserved variables (rho, m = rho*u), pressure law p(rho) = rho**gamma
(coefficient 1, fixed by the pressure-tensor isotropy of the kinetic
equilibrium).  Rusanov fluxes with minmod-limited linear reconstruction and
a Heun two-stage update give second order on smooth data.
"""

from dataclasses import dataclass

import numpy as np

from .discretization import SpatialGrid
from .equilibrium import RHO_FLOOR
from .errors import CflError, DensityFloorError


@dataclass
class EulerState:
    rho: np.ndarray            # sgrid.shape
    mom: np.ndarray            # sgrid.shape + (d,)
    sgrid: SpatialGrid
    t: float = 0.0

    def __post_init__(self):
        if self.rho.shape != self.sgrid.shape:
            raise ValueError("density shape does not match the grid")
        if self.mom.shape != self.sgrid.shape + (self.sgrid.dim,):
            raise ValueError("momentum shape does not match the grid")

    def velocity(self):
        return self.mom / self.rho[..., None]

    def copy(self):
        return EulerState(self.rho.copy(), self.mom.copy(), self.sgrid, self.t)


def _minmod(a, b):
    return np.where(a * b > 0.0, np.where(np.abs(a) < np.abs(b), a, b), 0.0)


def max_wave_speed(rho, mom, gamma: float) -> float:
    """Largest |u_k| + c over the grid, c = sqrt(gamma * rho**(gamma-1))."""
    u = mom / rho[..., None]
    cs = np.sqrt(gamma * rho ** (gamma - 1.0))
    return float(np.max(np.max(np.abs(u), axis=-1) + cs))


def _axis_rhs(rho, mom, gamma, sgrid, axis):
    """Rusanov flux divergence of (rho, m) along one axis, periodic."""
    d = sgrid.dim
    u_comps = [rho] + [mom[..., k] for k in range(d)]
    states_l = []
    states_r = []
    for comp in u_comps:
        slope = _minmod(
            comp - np.roll(comp, 1, axis), np.roll(comp, -1, axis) - comp
        )
        states_l.append(comp + 0.5 * slope)
        states_r.append(np.roll(comp - 0.5 * slope, -1, axis))

    def phys_flux(states):
        r = states[0]
        m = np.stack(states[1:], axis=-1)
        u = m / r[..., None]
        frho = m[..., axis]
        fm = m * u[..., axis][..., None]
        fm[..., axis] += r**gamma
        return [frho] + [fm[..., k] for k in range(d)]

    def speed(states):
        r = states[0]
        m = np.stack(states[1:], axis=-1)
        return np.abs(m[..., axis] / r) + np.sqrt(gamma * r ** (gamma - 1.0))

    fl = phys_flux(states_l)
    fr = phys_flux(states_r)
    smax = np.maximum(speed(states_l), speed(states_r))
    out = []
    for comp_l, comp_r, f_l, f_r in zip(states_l, states_r, fl, fr):
        phi = 0.5 * (f_l + f_r) - 0.5 * smax * (comp_r - comp_l)
        out.append((phi - np.roll(phi, 1, axis)) / sgrid.spacing)
    return out


def _rhs(rho, mom, gamma, sgrid):
    d = sgrid.dim
    total = _axis_rhs(rho, mom, gamma, sgrid, 0)
    for axis in range(1, d):
        part = _axis_rhs(rho, mom, gamma, sgrid, axis)
        total = [a + b for a, b in zip(total, part)]
    drho = -total[0]
    dmom = -np.stack(total[1:], axis=-1)
    return drho, dmom


def euler_step(state: EulerState, dt: float, gamma: float,
               max_courant: float = 1.0) -> EulerState:
    """One Heun step; conservative in (rho, m) to rounding."""
    s = state.sgrid
    if np.any(state.rho <= RHO_FLOOR):
        raise DensityFloorError(
            f"vacuum in Euler state: min rho {float(np.min(state.rho)):.3e}"
        )
    wave = max_wave_speed(state.rho, state.mom, gamma)
    courant = dt * wave * s.dim / s.spacing
    if courant > max_courant * (1.0 + 1e-12):
        raise CflError(
            f"Euler step dt={dt:.3e} gives Courant number {courant:.3f} "
            f"> {max_courant} (wave speed {wave:.3f})"
        )
    k1r, k1m = _rhs(state.rho, state.mom, gamma, s)
    r1 = state.rho + dt * k1r
    m1 = state.mom + dt * k1m
    if np.any(r1 <= RHO_FLOOR):
        raise DensityFloorError("vacuum in Euler predictor stage")
    k2r, k2m = _rhs(r1, m1, gamma, s)
    rho = 0.5 * (state.rho + r1 + dt * k2r)
    mom = 0.5 * (state.mom + m1 + dt * k2m)
    return EulerState(rho, mom, s, state.t + dt)


def run_euler(state: EulerState, t_end: float, gamma: float,
              cfl: float = 0.4) -> EulerState:
    """Advance to t_end with a CFL-chosen step, shortening the last step."""
    state = state.copy()
    while state.t < t_end - 1e-14:
        wave = max_wave_speed(state.rho, state.mom, gamma)
        dt = min(cfl * state.sgrid.spacing / (state.sgrid.dim * wave),
                 t_end - state.t)
        state = euler_step(state, dt, gamma, max_courant=1.0)
    return state


def restrict_mean(values: np.ndarray, factor: int, dim: int) -> np.ndarray:
    """Block-average a fine-grid field onto a coarser grid (factor per axis)."""
    out = values
    for axis in range(dim):
        shape = out.shape
        n = shape[axis] // factor
        new_shape = shape[:axis] + (n, factor) + shape[axis + 1:]
        out = out.reshape(new_shape).mean(axis=axis + 1)
    return out


def kinetic_vs_euler_error(rho_kinetic, u_kinetic, rho_euler, u_euler,
                           sgrid: SpatialGrid):
    """Grid L1 norms of the (rho, u) differences; shapes must match."""
    rho_kinetic = np.asarray(rho_kinetic)
    u_kinetic = np.asarray(u_kinetic)
    rho_euler = np.asarray(rho_euler)
    u_euler = np.asarray(u_euler)
    if rho_kinetic.shape != rho_euler.shape or u_kinetic.shape != u_euler.shape:
        raise ValueError(
            f"field shapes differ: {rho_kinetic.shape}/{rho_euler.shape}, "
            f"{u_kinetic.shape}/{u_euler.shape}"
        )
    err_rho = float(np.sum(np.abs(rho_kinetic - rho_euler)) * sgrid.cell_volume)
    err_u = float(np.sum(np.abs(u_kinetic - u_euler)) * sgrid.cell_volume)
    return err_rho, err_u
