"""Weighted perturbation around global equilibrium, hydrodynamic projection,
and the linear/nonlinear collision operators.

The distribution is split as F = M0 + omega * f, where the weight

    omega(v)^2 = c * (R^2 - |v|^2)_+ ** ((n-2)/2)   (= c**(2/n) * M0**((n-2)/n))

is the unique normalization for which {sqrt(n*gamma)*omega, sqrt(n)*v_j*omega}
is an orthonormal family in L^2_v and the residual left after subtracting the
projection from the exact collision term is quadratically small.  The inverse
weight blows up at the support sphere, so cells where M0 falls below a floor
are masked out; whatever the masks discard is reported as leakage, never
silently dropped.
"""

from dataclasses import dataclass

import numpy as np

from .equilibrium import (
    GasParams,
    VelocityGrid,
    bulk_velocity,
    global_equilibrium,
    maxwellian,
    moments,
)
from .errors import EnvelopeError, GridResolutionError

# Mask cells where M0 <= MASS_FLOOR_FACTOR * max(M0): the weighted
# perturbation is ill-conditioned there.
MASS_FLOOR_FACTOR = 1e-12

DEFAULT_ENVELOPE = 0.5
DEFAULT_GRAM_TOL = 1e-6


def _require_weighted_range(params: GasParams) -> None:
    if params.exponent <= 2.0:
        raise ValueError(
            f"weighted perturbation needs exponent n > 2 "
            f"(gamma < 1 + 2/(d+2)); got n = {params.exponent}"
        )


@dataclass(frozen=True)
class PerturbationWeight:
    """Weight field omega, its masked inverse, and the equilibrium M0."""

    exponent: float            # (n-2)/(2n), the formal weight exponent
    equilibrium: np.ndarray    # M0 on the grid nodes
    values: np.ndarray         # omega
    inverse: np.ndarray        # 1/omega on unmasked cells, 0 elsewhere
    mask: np.ndarray           # True where the weight is usable
    floor: float               # the M0 cutoff actually applied


def build_weight(params: GasParams, grid: VelocityGrid) -> PerturbationWeight:
    _require_weighted_range(params)
    n = params.exponent
    m0 = global_equilibrium(params, grid)
    base = params.pressure_coeff - grid.speed_sq
    omega_sq = params.norm_const * np.where(base > 0.0, base, 0.0) ** ((n - 2.0) / 2.0)
    omega = np.sqrt(omega_sq)
    floor = MASS_FLOOR_FACTOR * float(np.max(m0))
    mask = m0 > floor
    inverse = np.where(mask, 1.0 / np.where(mask, omega, 1.0), 0.0)
    return PerturbationWeight(
        exponent=(n - 2.0) / (2.0 * n),
        equilibrium=m0,
        values=np.where(mask, omega, 0.0),
        inverse=inverse,
        mask=mask,
        floor=floor,
    )


@dataclass(frozen=True)
class ProjectionBasis:
    """Orthonormal span of the weighted hydrodynamic directions.

    vectors[0]   = sqrt(n*gamma) * omega
    vectors[1+j] = sqrt(n) * v_j * omega
    """

    vectors: np.ndarray        # (d+1, n_nodes)
    gram: np.ndarray           # (d+1, d+1) quadrature Gram matrix
    deviation: float           # max |gram - identity|
    weight: PerturbationWeight
    grid: VelocityGrid
    params: GasParams


def build_basis(params: GasParams, grid: VelocityGrid,
                gram_tol: float = DEFAULT_GRAM_TOL,
                weight: PerturbationWeight | None = None) -> ProjectionBasis:
    """Build the projection basis and verify its discrete orthonormality."""
    if weight is None:
        weight = build_weight(params, grid)
    n, g = params.exponent, params.gamma
    omega = weight.values
    vecs = [np.sqrt(n * g) * omega]
    vecs += [np.sqrt(n) * grid.nodes[:, j] * omega for j in range(params.dim)]
    vectors = np.stack(vecs)
    gram = (vectors * grid.weight) @ vectors.T
    deviation = float(np.max(np.abs(gram - np.eye(params.dim + 1))))
    if deviation > gram_tol:
        raise GridResolutionError(
            f"basis Gram matrix deviates from identity by {deviation:.3e} "
            f"(> {gram_tol:.1e}); the velocity grid is too coarse"
        )
    return ProjectionBasis(vectors, gram, deviation, weight, grid, params)


def to_perturbation(F_values: np.ndarray, weight: PerturbationWeight):
    """f = (F - M0) / omega on unmasked cells; 0 on masked cells.

    Returns (f, leakage) where leakage is the absolute quadrature mass of
    the residual discarded on masked cells (per velocity weight, summed
    over all leading axes).
    """
    resid = F_values - weight.equilibrium
    f = np.where(weight.mask, resid * weight.inverse, 0.0)
    leakage = float(np.sum(np.abs(np.where(weight.mask, 0.0, resid))))
    return f, leakage


def from_perturbation(f_values: np.ndarray, weight: PerturbationWeight) -> np.ndarray:
    """F = M0 + omega * f; masked cells return M0."""
    return weight.equilibrium + np.where(weight.mask, weight.values * f_values, 0.0)


def project(f_values: np.ndarray, basis: ProjectionBasis) -> np.ndarray:
    """Orthogonal projection onto the hydrodynamic span, by quadrature."""
    coeffs = f_values @ (basis.vectors.T * basis.grid.weight)
    return coeffs @ basis.vectors


def linear_op(f_values: np.ndarray, basis: ProjectionBasis) -> np.ndarray:
    """L f = P f - f."""
    return project(f_values, basis) - f_values


def macro_coeffs(f_values: np.ndarray, basis: ProjectionBasis):
    """Hydrodynamic coefficients (a, b) with P f = (a + v . b) * omega.

    a = n*gamma * int f omega dv,  b_j = n * int v_j f omega dv.
    """
    p = basis.params
    grid = basis.grid
    omega = basis.weight.values
    a = p.exponent * p.gamma * np.sum(f_values * omega, axis=-1) * grid.weight
    b = np.stack(
        [
            p.exponent * np.sum(f_values * grid.nodes[:, j] * omega, axis=-1)
            * grid.weight
            for j in range(p.dim)
        ],
        axis=-1,
    )
    return a, b


def nonlinear_op(f_values: np.ndarray, basis: ProjectionBasis,
                 envelope: float = DEFAULT_ENVELOPE):
    """Exact nonlinear residual of the collision term in perturbation form.

    Computes Gamma(f) = omega^{-1} (M[F] - M0) - P(f) with F reconstructed
    from f, which agrees with the second-order expansion of the collision
    term but needs no intermediate-state bookkeeping.  By construction
    L(f) + Gamma(f) = omega^{-1} (M[F] - M0) - f on unmasked cells.

    Returns (gamma_values, leakage).  Raises EnvelopeError when the macro
    state leaves the perturbative envelope |rho - 1|, |u| <= envelope.
    """
    weight = basis.weight
    grid = basis.grid
    params = basis.params
    F = from_perturbation(f_values, weight)
    rho, mom, _ = moments(F, grid)
    u = bulk_velocity(rho, mom)
    dev_rho = float(np.max(np.abs(rho - 1.0)))
    dev_u = float(np.max(np.abs(u)))
    if dev_rho > envelope or dev_u > envelope:
        raise EnvelopeError(
            f"macro state outside perturbative envelope: max|rho-1|={dev_rho:.3e}, "
            f"max|u|={dev_u:.3e}, envelope={envelope}"
        )
    mf = maxwellian(params, rho, u, grid.nodes)
    resid = mf - weight.equilibrium
    gamma = np.where(weight.mask, resid * weight.inverse, 0.0) - project(f_values, basis)
    gamma = np.where(weight.mask, gamma, 0.0)
    leakage = float(np.sum(np.abs(np.where(weight.mask, 0.0, resid))))
    return gamma, leakage


def perturbation_moments(f_values: np.ndarray, weight: PerturbationWeight,
                         grid: VelocityGrid, cell_volume: float = 1.0):
    """Total weighted mass and momentum of the perturbation.

    Returns (int omega f dx dv, int v omega f dx dv); both vanish for
    solutions started from moment-free data and stay zero under the flow.
    """
    wf = f_values * weight.values
    mass = float(np.sum(wf) * grid.weight * cell_volume)
    mom = np.array(
        [
            float(np.sum(wf * grid.nodes[:, j]) * grid.weight * cell_volume)
            for j in range(grid.dim)
        ]
    )
    return mass, mom


def remove_total_moments(f_values: np.ndarray, basis: ProjectionBasis,
                         volume: float, cell_volume: float) -> np.ndarray:
    """Subtract an x-uniform hydrodynamic component so the total weighted
    mass and momentum of the perturbation vanish exactly (in quadrature)."""
    weight = basis.weight
    grid = basis.grid
    mass, mom = perturbation_moments(f_values, weight, grid, cell_volume)
    omega = weight.values
    s0 = float(np.sum(omega * omega) * grid.weight)
    out = f_values - (mass / (s0 * volume)) * omega
    for j in range(grid.dim):
        s2 = float(np.sum(grid.nodes[:, j] ** 2 * omega * omega) * grid.weight)
        out = out - (mom[j] / (s2 * volume)) * grid.nodes[:, j] * omega
    return np.where(weight.mask, out, 0.0)
