"""Measured quantities: energy functional, micro/macro norms, coercivity,
macro-micro coefficient report, decay-rate fits, and conservation ledgers.

The energy functional sums squared L2 norms of spatial derivatives of the
perturbation up to order N (time derivatives are expressible through the
equation on solutions and are not discretized).  CSV output follows a fixed
column schema:

    t, mass, momentum_0..momentum_{d-1}, entropy, E_total, E_0..E_N,
    P_norm2, IP_norm2, leakage, delta_hat
"""

import csv
from dataclasses import dataclass

import numpy as np

from .discretization import (
    SpatialGrid,
    multi_index_derivative,
    multi_indices,
    spatial_derivative,
)
from .equilibrium import GasParams, VelocityGrid, kinetic_entropy, moments
from .perturbation import (
    ProjectionBasis,
    linear_op,
    macro_coeffs,
    nonlinear_op,
    project,
    to_perturbation,
)
from .solver import SolverState


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    momentum: tuple
    entropy: float
    energy_total: float
    energy_per_order: tuple    # k = 0..N
    p_norm2: float
    ip_norm2: float
    leakage: float
    delta_hat: float
    envelope_ok: bool


@dataclass(frozen=True)
class DecayFit:
    window: tuple
    rate: float          # lambda, the decay rate of E(f)
    intercept: float
    r_squared: float
    n_samples: int


def energy_functional(f_values: np.ndarray, sgrid: SpatialGrid,
                      vgrid: VelocityGrid, order_max: int,
                      stencil_order: int = 2):
    """Per-order derivative energies of a perturbation field.

    Returns (total, [E_0, ..., E_N]) where E_k sums the squared L2_{x,v}
    norms over all spatial multi-indices with |alpha| = k, enumerated in a
    fixed graded-lexicographic order.
    """
    w = vgrid.weight * sgrid.cell_volume
    per_order = [0.0] * (order_max + 1)
    for alpha in multi_indices(sgrid.dim, order_max):
        deriv = multi_index_derivative(f_values, sgrid, alpha, stencil_order)
        per_order[sum(alpha)] += float(np.sum(deriv * deriv)) * w
    return sum(per_order), per_order


def coercivity_defect(f_values: np.ndarray, basis: ProjectionBasis,
                      sgrid: SpatialGrid, order_max: int,
                      stencil_order: int = 2):
    """Defect of the dissipation identity, and the empirical coercivity rate.

    Returns (defect, delta_hat) with
        defect    = sum_alpha [ <L d^a f, d^a f> + ||(I-P) d^a f||^2 ],
        delta_hat = -sum_alpha <L d^a f, d^a f> / sum_alpha ||d^a f||^2.
    The defect vanishes identically for an exactly orthonormal basis.
    """
    grid = basis.grid
    w = grid.weight * sgrid.cell_volume
    cross = 0.0
    micro = 0.0
    total = 0.0
    for alpha in multi_indices(sgrid.dim, order_max):
        deriv = multi_index_derivative(f_values, sgrid, alpha, stencil_order)
        ld = linear_op(deriv, basis)
        ip = -ld  # (I - P) f = -(L f)
        cross += float(np.sum(ld * deriv)) * w
        micro += float(np.sum(ip * ip)) * w
        total += float(np.sum(deriv * deriv)) * w
    defect = cross + micro
    delta_hat = -cross / total if total > 0.0 else 0.0
    return defect, delta_hat


@dataclass(frozen=True)
class MacroMicroReport:
    a_norms_sq: tuple          # per derivative order 0..N
    b_norms_sq: tuple
    lhs: float                 # sum over |alpha| <= N of ||d^a a||^2 + ||d^a b||^2
    ell_norms_sq: dict         # keys 'a', 'a_i', 'b_ij'; sums over |alpha| <= N-1
    h_norms_sq: dict
    rhs: float
    ab_ratio: float            # lhs / rhs, reported, never asserted
    p_norm2: float             # sum over |alpha| <= N of ||P d^a f||^2
    ip_norm2: float
    p_over_ip: float


def _moment_family(basis: ProjectionBasis):
    """{1, v_i, v_i v_j (i<=j)} * omega and its quadrature Gram matrix."""
    grid = basis.grid
    omega = basis.weight.values
    rows = [omega]
    labels = [("a", ())]
    d = grid.dim
    for i in range(d):
        rows.append(grid.nodes[:, i] * omega)
        labels.append(("a_i", (i,)))
    for i in range(d):
        for j in range(i, d):
            rows.append(grid.nodes[:, i] * grid.nodes[:, j] * omega)
            labels.append(("b_ij", (i, j)))
    chi = np.stack(rows)
    gram = (chi * grid.weight) @ chi.T
    return chi, gram, labels


def _expand_coefficients(g_values, chi, gram, grid):
    """Coefficients of g in span{chi_m}, per spatial point (Gram solve)."""
    inner = g_values @ (chi.T * grid.weight)
    return np.linalg.solve(gram, inner[..., None])[..., 0]


def macro_micro_report(f_values: np.ndarray, basis: ProjectionBasis,
                       sgrid: SpatialGrid, order_max: int,
                       stencil_order: int = 2,
                       envelope: float = 0.5) -> MacroMicroReport:
    """Macro coefficient norms and the source-term norms that bound them.

    The time derivative entering the micro source is substituted from the
    equation (d_t f = -v . grad f + L f + Gamma f) rather than differenced
    in time, which avoids cadence-dependent noise.  The bound of the
    coefficient estimate is reported as a ratio, never asserted, because
    its constant is not quantitative.
    """
    grid = basis.grid
    w = grid.weight * sgrid.cell_volume
    a, b = macro_coeffs(f_values, basis)

    a_norms = [0.0] * (order_max + 1)
    b_norms = [0.0] * (order_max + 1)
    for alpha in multi_indices(sgrid.dim, order_max):
        k = sum(alpha)
        da = multi_index_derivative(a, sgrid, alpha, stencil_order)
        a_norms[k] += float(np.sum(da * da)) * sgrid.cell_volume
        db = multi_index_derivative(b, sgrid, alpha, stencil_order)
        b_norms[k] += float(np.sum(db * db)) * sgrid.cell_volume
    lhs = sum(a_norms) + sum(b_norms)

    # micro and nonlinear sources of the macro dynamics
    gamma_f, _ = nonlinear_op(f_values, basis, envelope)
    pf = project(f_values, basis)
    ipf = f_values - pf
    transport_f = _v_dot_grad(f_values, basis, sgrid, stencil_order)
    dt_f = -transport_f + linear_op(f_values, basis) + gamma_f
    dt_ipf = dt_f - project(dt_f, basis)
    ell = -dt_ipf - _v_dot_grad(ipf, basis, sgrid, stencil_order) + linear_op(ipf, basis)

    chi, gram, labels = _moment_family(basis)
    ell_sums = {"a": 0.0, "a_i": 0.0, "b_ij": 0.0}
    h_sums = {"a": 0.0, "a_i": 0.0, "b_ij": 0.0}
    for alpha in multi_indices(sgrid.dim, max(order_max - 1, 0)):
        dell = multi_index_derivative(ell, sgrid, alpha, stencil_order)
        dh = multi_index_derivative(gamma_f, sgrid, alpha, stencil_order)
        ell_coeff = _expand_coefficients(dell, chi, gram, grid)
        h_coeff = _expand_coefficients(dh, chi, gram, grid)
        for m, (kind, _) in enumerate(labels):
            ell_sums[kind] += float(np.sum(ell_coeff[..., m] ** 2)) * sgrid.cell_volume
            h_sums[kind] += float(np.sum(h_coeff[..., m] ** 2)) * sgrid.cell_volume
    rhs = sum(ell_sums.values()) + sum(h_sums.values())

    p2 = 0.0
    ip2 = 0.0
    for alpha in multi_indices(sgrid.dim, order_max):
        deriv = multi_index_derivative(f_values, sgrid, alpha, stencil_order)
        pd = project(deriv, basis)
        p2 += float(np.sum(pd * pd)) * w
        ip2 += float(np.sum((deriv - pd) ** 2)) * w

    return MacroMicroReport(
        a_norms_sq=tuple(a_norms),
        b_norms_sq=tuple(b_norms),
        lhs=lhs,
        ell_norms_sq=ell_sums,
        h_norms_sq=h_sums,
        rhs=rhs,
        ab_ratio=lhs / rhs if rhs > 0.0 else float("inf"),
        p_norm2=p2,
        ip_norm2=ip2,
        p_over_ip=p2 / ip2 if ip2 > 0.0 else float("inf"),
    )


def _v_dot_grad(g_values, basis, sgrid, stencil_order):
    grid = basis.grid
    out = grid.nodes[:, 0] * spatial_derivative(g_values, sgrid, 0, stencil_order)
    for axis in range(1, sgrid.dim):
        out = out + grid.nodes[:, axis] * spatial_derivative(
            g_values, sgrid, axis, stencil_order
        )
    return out


def fit_decay(times, energies, window, floor: float = 1e-300) -> DecayFit:
    """Least-squares line through (t, ln E) on the window; rate = -slope."""
    times = np.asarray(times, dtype=float)
    energies = np.asarray(energies, dtype=float)
    t0, t1 = window
    if not t1 > t0:
        raise ValueError(f"empty fit window {window}")
    sel = (times >= t0) & (times <= t1)
    tt = times[sel]
    ee = energies[sel]
    if tt.size < 10:
        raise ValueError(f"fit window {window} holds {tt.size} samples, need >= 10")
    if np.any(ee <= floor):
        raise ValueError("energy at or below the underflow floor inside the window")
    log_e = np.log(ee)
    design = np.stack([tt, np.ones_like(tt)], axis=-1)
    coeff, *_ = np.linalg.lstsq(design, log_e, rcond=None)
    predicted = design @ coeff
    ss_res = float(np.sum((log_e - predicted) ** 2))
    ss_tot = float(np.sum((log_e - log_e.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res == 0.0 else 1.0 - ss_res / ss_tot
    return DecayFit(
        window=(float(t0), float(t1)),
        rate=float(-coeff[0]),
        intercept=float(coeff[1]),
        r_squared=r2,
        n_samples=int(tt.size),
    )


@dataclass(frozen=True)
class ConservationReport:
    mass_drift_rel: float
    momentum_drift_abs: float


def conservation_report(records) -> ConservationReport:
    """Worst-case mass/momentum drifts over a trajectory of records."""
    mass0 = records[0].mass
    mom0 = np.asarray(records[0].momentum)
    mass_drift = max(abs(r.mass - mass0) / abs(mass0) for r in records)
    mom_drift = max(
        float(np.max(np.abs(np.asarray(r.momentum) - mom0))) for r in records
    )
    return ConservationReport(
        mass_drift_rel=mass_drift,
        momentum_drift_abs=mom_drift,
    )


class DiagnosticsRecorder:
    """Observer computing one DiagnosticsRecord per solver cadence tick."""

    def __init__(self, params: GasParams, basis: ProjectionBasis,
                 sgrid: SpatialGrid, order_max: int = 2,
                 stencil_order: int = 2, envelope: float = 0.5):
        self.params = params
        self.basis = basis
        self.sgrid = sgrid
        self.order_max = order_max
        self.stencil_order = stencil_order
        self.envelope = envelope
        self.records: list[DiagnosticsRecord] = []

    def __call__(self, state: SolverState) -> None:
        self.records.append(self.compute(state))

    def compute(self, state: SolverState) -> DiagnosticsRecord:
        field = state.field
        grid = field.vgrid
        w_x = self.sgrid.cell_volume
        rho, mom, _ = moments(field.values, grid)
        mass = float(np.sum(rho)) * w_x
        momentum = tuple(float(np.sum(mom[..., k])) * w_x for k in range(grid.dim))
        entropy = kinetic_entropy(field.values, grid, self.params, w_x)
        f, leakage = to_perturbation(field.values, self.basis.weight)
        total, per_order = energy_functional(
            f, self.sgrid, grid, self.order_max, self.stencil_order
        )
        pf = project(f, self.basis)
        p2 = float(np.sum(pf * pf)) * grid.weight * w_x
        ip2 = float(np.sum((f - pf) ** 2)) * grid.weight * w_x
        _, delta_hat = coercivity_defect(
            f, self.basis, self.sgrid, self.order_max, self.stencil_order
        )
        env_ok = bool(
            np.max(np.abs(rho - 1.0)) <= self.envelope
            and np.max(np.abs(mom / rho[..., None])) <= self.envelope
        )
        return DiagnosticsRecord(
            t=state.t,
            mass=mass,
            momentum=momentum,
            entropy=entropy,
            energy_total=total,
            energy_per_order=tuple(per_order),
            p_norm2=p2,
            ip_norm2=ip2,
            leakage=leakage,
            delta_hat=delta_hat,
            envelope_ok=env_ok,
        )


def csv_header(dim: int, order_max: int):
    cols = ["t", "mass"]
    cols += [f"momentum_{k}" for k in range(dim)]
    cols += ["entropy", "E_total"]
    cols += [f"E_{k}" for k in range(order_max + 1)]
    cols += ["P_norm2", "IP_norm2", "leakage", "delta_hat"]
    return cols


def write_records_csv(path, records, dim: int, order_max: int) -> None:
    """RFC-4180 CSV with the documented column schema ('.' decimal point)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(dim, order_max))
        for r in records:
            row = [f"{r.t:.17g}", f"{r.mass:.17g}"]
            row += [f"{m:.17g}" for m in r.momentum]
            row += [f"{r.entropy:.17g}", f"{r.energy_total:.17g}"]
            row += [f"{e:.17g}" for e in r.energy_per_order]
            row += [
                f"{r.p_norm2:.17g}", f"{r.ip_norm2:.17g}",
                f"{r.leakage:.17g}", f"{r.delta_hat:.17g}",
            ]
            writer.writerow(row)
