"""Model constants, the compactly supported equilibrium profile, moments,
and the kinetic entropy.

The equilibrium distribution attached to a macroscopic state (rho, u) is

    M(rho, u; v) = c * (2*gamma/(gamma-1) * rho**(gamma-1) - |v - u|^2)_+ ** (n/2)

with n = 2/(gamma-1) - d and c a Gamma-function normalization chosen so the
velocity integral of M equals rho.  All velocity integrals use a uniform
midpoint rule; the integrand's kink at the support sphere is of order n/2,
so the rule converges fast for the gamma range of interest.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DensityFloorError

# Below this density a cell is treated as vacuum instead of dividing by it.
RHO_FLOOR = 1e-13


@dataclass(frozen=True)
class GasParams:
    """Constant pack defining the model for one (gamma, d) pair.

    gamma           pressure-law exponent, strictly inside (1, 1 + 2/d)
    dim             spatial/velocity dimension d
    exponent        power-law exponent n = 2/(gamma-1) - d of the profile
    norm_const      normalization constant c of the equilibrium profile
    support_radius  velocity support radius R = sqrt(2*gamma/(gamma-1)) at rho=1
    """

    gamma: float
    dim: int
    exponent: float
    norm_const: float
    support_radius: float

    @property
    def pressure_coeff(self) -> float:
        """2*gamma/(gamma-1), the coefficient of rho**(gamma-1) in the profile."""
        return 2.0 * self.gamma / (self.gamma - 1.0)


def derive_params(gamma: float, d: int) -> GasParams:
    """Derive the model constants from (gamma, d).

    Raises ValueError outside the admissible range 1 < gamma < 1 + 2/d or
    for a non-positive dimension.  The Gamma function is evaluated by the
    C library (Lanczos-type), giving relative error well below 1e-12.
    """
    if not isinstance(d, (int, np.integer)) or d <= 0:
        raise ValueError(f"dimension must be a positive integer, got {d!r}")
    if not (1.0 < gamma < 1.0 + 2.0 / d):
        upper = 1.0 + 2.0 / d
        raise ValueError(
            f"gamma={gamma} outside the admissible open interval (1, {upper})"
        )
    n = 2.0 / (gamma - 1.0) - d
    coeff = 2.0 * gamma / (gamma - 1.0)
    c = (
        coeff ** (-1.0 / (gamma - 1.0))
        * math.gamma(gamma / (gamma - 1.0))
        / (math.pi ** (d / 2.0) * math.gamma(n / 2.0 + 1.0))
    )
    return GasParams(
        gamma=float(gamma),
        dim=int(d),
        exponent=n,
        norm_const=c,
        support_radius=math.sqrt(coeff),
    )


@dataclass(frozen=True)
class MacroState:
    """Density/velocity pair feeding the equilibrium profile."""

    rho: float
    u: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        object.__setattr__(self, "u", u)
        if not (self.rho > 0.0) or not np.all(np.isfinite(u)):
            raise ValueError(f"invalid macro state rho={self.rho}, u={u}")


class VelocityGrid:
    """Uniform midpoint grid on the box [-(1+margin)R, (1+margin)R]^d.

    The margin leaves room for the support of equilibria with rho > 1,
    which exceeds that of the global equilibrium.  Nodes are cell centers,
    every cell carries the same weight (the cell volume), and the node set
    is symmetric under v -> -v.
    """

    def __init__(self, params: GasParams, points_per_axis: int, margin: float = 0.1):
        if points_per_axis < 2:
            raise ValueError("need at least 2 velocity points per axis")
        d = params.dim
        half = (1.0 + margin) * params.support_radius
        dv = 2.0 * half / points_per_axis
        axis = -half + (np.arange(points_per_axis) + 0.5) * dv
        if d == 1:
            nodes = axis[:, None]
        else:
            mesh = np.meshgrid(*([axis] * d), indexing="ij")
            nodes = np.stack([m.ravel() for m in mesh], axis=-1)
        self.dim = d
        self.points_per_axis = int(points_per_axis)
        self.half_extent = half
        self.margin = float(margin)
        self.spacing = dv
        self.axis = axis
        self.nodes = nodes                      # (n_nodes, d)
        self.n_nodes = nodes.shape[0]
        self.weight = dv**d                    # uniform midpoint weight
        self.speed_sq = np.sum(nodes**2, axis=-1)
        self.max_speed = float(np.max(np.abs(axis)))

    def integrate(self, values: np.ndarray) -> np.ndarray:
        """Quadrature over velocity (last axis), fixed pairwise reduction."""
        return np.sum(values, axis=-1) * self.weight


def maxwellian(params: GasParams, rho, u=None, nodes: np.ndarray = None) -> np.ndarray:
    """Equilibrium profile at (rho, u) sampled on velocity nodes.

    rho may be a MacroState (in which case u is taken from it), a scalar,
    or an array (...,); u scalar/(d,)/(..., d); nodes (n, d).  Returns
    shape (..., n).  Cells with rho <= RHO_FLOOR yield identically zero
    instead of an ill-defined profile.
    """
    if isinstance(rho, MacroState):
        rho, u = rho.rho, rho.u
    rho = np.asarray(rho, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape[-1] != params.dim:
        raise ValueError(f"velocity has dimension {u.shape[-1]}, expected {params.dim}")
    diff = nodes - u[..., None, :]
    base = (
        params.pressure_coeff * rho[..., None] ** (params.gamma - 1.0)
        - np.sum(diff * diff, axis=-1)
    )
    out = params.norm_const * np.where(base > 0.0, base, 0.0) ** (params.exponent / 2.0)
    if np.any(rho <= RHO_FLOOR):
        out = np.where(rho[..., None] <= RHO_FLOOR, 0.0, out)
    return out


def global_equilibrium(params: GasParams, grid: VelocityGrid) -> np.ndarray:
    """Equilibrium at (rho, u) = (1, 0) on the grid nodes."""
    return maxwellian(params, 1.0, np.zeros(params.dim), grid.nodes)


def moments(values: np.ndarray, grid: VelocityGrid):
    """Density, momentum and energy moments of a velocity profile.

    values has shape (..., n_nodes); returns (rho (...,), momentum (..., d),
    energy (...,)).  Sums use NumPy's pairwise reduction in a fixed order,
    so results are reproducible bit-for-bit.
    """
    rho = np.sum(values, axis=-1) * grid.weight
    mom = np.stack(
        [np.sum(values * grid.nodes[:, k], axis=-1) for k in range(grid.dim)],
        axis=-1,
    ) * grid.weight
    energy = np.sum(values * grid.speed_sq, axis=-1) * grid.weight
    return rho, mom, energy


def bulk_velocity(rho, mom):
    """u = momentum / rho, guarding the vacuum floor."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= RHO_FLOOR):
        raise DensityFloorError(
            f"density {float(np.min(rho)):.3e} at or below floor {RHO_FLOOR:.0e}"
        )
    return mom / rho[..., None]


def macro_state_of(values: np.ndarray, grid: VelocityGrid) -> MacroState:
    """Macro state of one velocity profile; signals the vacuum floor."""
    rho, mom, _ = moments(values, grid)
    u = bulk_velocity(rho, mom)
    return MacroState(float(rho), u)


def entropy_density(values: np.ndarray, grid: VelocityGrid, params: GasParams):
    """Velocity integral of the kinetic entropy of one profile.

    H(F, v) = |v|^2 F / 2 + F**(1 + 2/n) / (2 c^{2/n} (1 + 2/n)); requires
    gamma < 1 + 2/d.  Negative values from scheme undershoot are clipped at
    zero before taking the fractional power.
    """
    n = params.exponent
    q = 1.0 + 2.0 / n
    fpos = np.maximum(values, 0.0)
    h = 0.5 * grid.speed_sq * fpos + fpos**q / (2.0 * params.norm_const ** (2.0 / n) * q)
    return np.sum(h, axis=-1) * grid.weight


def kinetic_entropy(values: np.ndarray, grid: VelocityGrid, params: GasParams,
                    cell_volume: float = 1.0) -> float:
    """Total kinetic entropy of a field, integrated over velocity and space."""
    return float(np.sum(entropy_density(values, grid, params)) * cell_volume)


def support_radius(params: GasParams, rho: float, u) -> float:
    """Largest |v| in the support of the equilibrium at (rho, u)."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return params.support_radius * rho ** ((params.gamma - 1.0) / 2.0) + float(
        np.linalg.norm(u)
    )


def fits_in_grid(params: GasParams, rho: float, u, grid: VelocityGrid,
                 safety: float = 0.999) -> bool:
    """Whether the equilibrium support at (rho, u) lies inside the grid box."""
    return support_radius(params, rho, u) <= safety * grid.half_extent
