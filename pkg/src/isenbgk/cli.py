"""Command-line interface: `verify`, `run`, `decay`, `hydro-limit`.

Exit codes: 0 success, 1 check or fit failure, 2 configuration error,
3 runtime abort (perturbative envelope, CFL, vacuum, or correction
failure).  All CSV output is RFC-4180 with '.' as decimal separator; JSON
reports are UTF-8 with sorted keys.

Heavy numerical imports happen inside the command functions so that
--threads can cap the numerical backend's thread pools before NumPy loads.
"""

import argparse
import json
import os
import sys


def _apply_thread_cap(threads: int) -> None:
    if threads and threads > 0:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                    "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS"):
            os.environ.setdefault(var, str(threads))


def _prepare_out(path, overwrite: bool):
    from .errors import ConfigError

    if path is None:
        raise ConfigError("this command needs --out <dir>")
    if os.path.isdir(path) and os.listdir(path) and not overwrite:
        raise ConfigError(
            f"output directory {path!r} exists and is not empty "
            "(pass --overwrite to reuse it)"
        )
    os.makedirs(path, exist_ok=True)
    return path


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _build_initial(problem, cfg):
    from .initial import build_initial

    return build_initial(
        problem.params, problem.sgrid, problem.vgrid,
        family=cfg["initial.family"],
        amplitude=cfg["initial.amplitude"],
        wavenumber=cfg["initial.wavenumber"],
        coefficients=cfg["initial.coefficients"],
        basis=problem.basis,
        snapshot_path=cfg["initial.snapshot"],
    )


def cmd_verify(args) -> int:
    from .config import build_problem, dump, load
    from .verify import run_checks

    cfg = load(args.config)
    # build with the Gram gate disabled so under-resolution shows up as a
    # failing check in the report instead of an exception
    relaxed = dict(cfg)
    relaxed["perturbation.gram_tolerance"] = float("inf")
    problem = build_problem(relaxed)
    report = run_checks(problem, gram_tol=cfg["perturbation.gram_tolerance"])
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = _prepare_out(args.out, args.overwrite)
        _write_json(os.path.join(out, "verify_report.json"), report)
        dump(cfg, os.path.join(out, "config.json"))
    return 0 if report["passed"] else 1


class _SnapshotWriter:
    def __init__(self, out_dir, interval, gamma):
        self.out_dir = out_dir
        self.interval = interval
        self.gamma = gamma
        self.next_tick = 0.0

    def __call__(self, state) -> None:
        from .discretization import write_snapshot

        if self.interval <= 0.0 or state.t < self.next_tick - 1e-12:
            return
        path = os.path.join(self.out_dir, f"snapshot_{state.steps:06d}.bin")
        write_snapshot(path, state.field, self.gamma, state.t)
        while self.next_tick <= state.t + 1e-12:
            self.next_tick += self.interval


def _run_with_flush(problem, initial, observers, recorder, out, cfg,
                    t_start: float = 0.0):
    """Run the solver; always flush whatever diagnostics were collected."""
    from .diagnostics import write_records_csv
    from .solver import run

    try:
        return run(initial, problem.params, problem.solver_config, observers,
                   t_start=t_start)
    finally:
        if recorder.records:
            write_records_csv(
                os.path.join(out, "diagnostics.csv"), recorder.records,
                problem.params.dim, cfg["diagnostics.order"],
            )


def cmd_run(args) -> int:
    from .config import build_problem, dump, load
    from .diagnostics import DiagnosticsRecorder
    from .errors import ConfigError

    cfg = load(args.config)
    problem = build_problem(cfg)
    out = _prepare_out(args.out, args.overwrite)
    dump(cfg, os.path.join(out, "config.json"))
    t_start = 0.0
    if cfg["initial.family"] == "snapshot":
        from .discretization import read_snapshot

        if cfg["initial.snapshot"] is None:
            raise ConfigError("initial.snapshot: required for the snapshot family")
        initial, snap_gamma, t_start = read_snapshot(
            cfg["initial.snapshot"], problem.sgrid, problem.vgrid
        )
        if abs(snap_gamma - problem.params.gamma) > 1e-12:
            raise ConfigError(
                f"initial.snapshot: gamma {snap_gamma} does not match the "
                f"configured {problem.params.gamma}"
            )
    else:
        initial = _build_initial(problem, cfg)
    recorder = DiagnosticsRecorder(
        problem.params, problem.basis, problem.sgrid,
        cfg["diagnostics.order"], cfg["diagnostics.stencil_order"],
        cfg["solver.envelope"],
    )
    observers = [recorder,
                 _SnapshotWriter(out, cfg["solver.snapshot_interval"],
                                 problem.params.gamma)]
    state = _run_with_flush(problem, initial, observers, recorder, out, cfg,
                            t_start=t_start)
    from .discretization import write_snapshot

    write_snapshot(os.path.join(out, "snapshot_final.bin"),
                   state.field, problem.params.gamma, state.t)
    return 0


def cmd_decay(args) -> int:
    from .config import build_problem, dump, load
    from .diagnostics import DiagnosticsRecorder, fit_decay, write_records_csv
    from .discretization import KineticField
    from .perturbation import from_perturbation, remove_total_moments, to_perturbation

    cfg = load(args.config)
    problem = build_problem(cfg)
    out = _prepare_out(args.out, args.overwrite)
    dump(cfg, os.path.join(out, "config.json"))

    initial = _build_initial(problem, cfg)
    f0, _ = to_perturbation(initial.values, problem.weight)
    f0 = remove_total_moments(f0, problem.basis, problem.sgrid.volume,
                              problem.sgrid.cell_volume)
    initial = KineticField(from_perturbation(f0, problem.weight),
                           problem.sgrid, problem.vgrid)

    recorder = DiagnosticsRecorder(
        problem.params, problem.basis, problem.sgrid,
        cfg["diagnostics.order"], cfg["diagnostics.stencil_order"],
        cfg["solver.envelope"],
    )
    _run_with_flush(problem, initial, [recorder], recorder, out, cfg)
    write_records_csv(os.path.join(out, "trajectory.csv"), recorder.records,
                      problem.params.dim, cfg["diagnostics.order"])

    t0 = cfg["decay.fit_start"]
    t1 = cfg["decay.fit_end"] if cfg["decay.fit_end"] is not None \
        else problem.solver_config.t_end
    times = [r.t for r in recorder.records]
    energies = [r.energy_total for r in recorder.records]
    try:
        fit = fit_decay(times, energies, (t0, t1))
    except ValueError as exc:
        _write_json(os.path.join(out, "decay_fit.json"),
                    {"refused": str(exc), "window": [t0, t1]})
        print(f"decay fit refused: {exc}", file=sys.stderr)
        return 1
    payload = {
        "window": list(fit.window),
        "rate": fit.rate,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "n_samples": fit.n_samples,
    }
    _write_json(os.path.join(out, "decay_fit.json"), payload)
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def cmd_hydro_limit(args) -> int:
    import csv

    import numpy as np

    from .config import build_problem, dump, load
    from .discretization import SpatialGrid
    from .equilibrium import bulk_velocity, moments
    from .euler_ref import (
        EulerState,
        kinetic_vs_euler_error,
        restrict_mean,
        run_euler,
    )
    from .solver import run

    cfg = load(args.config)
    out = _prepare_out(args.out, args.overwrite)
    t_end = cfg["hydro.t_end"]
    epsilons = cfg["hydro.epsilons"]
    problem = build_problem(cfg, t_end=t_end)
    dump(cfg, os.path.join(out, "config.json"))

    # Euler reference on a refined grid, restricted by cell averaging
    refine = max(int(cfg["hydro.euler_refine"]), 1)
    fine = SpatialGrid(problem.params.dim,
                       problem.sgrid.cells_per_axis * refine,
                       problem.sgrid.length)
    amp = cfg["initial.amplitude"]
    k = 2.0 * np.pi * cfg["initial.wavenumber"] / fine.length
    if cfg["initial.family"] != "density_mode":
        from .errors import ConfigError

        raise ConfigError(
            "hydro-limit compares density_mode data; set initial.family")
    x1 = fine.axis.reshape((fine.cells_per_axis,) + (1,) * (fine.dim - 1))
    rho_f = 1.0 + amp * np.cos(k * x1) * np.ones(fine.shape)
    mom_f = np.zeros(fine.shape + (fine.dim,))
    euler = run_euler(EulerState(rho_f, mom_f, fine), t_end,
                      problem.params.gamma, cfg["hydro.euler_cfl"])
    rho_e = restrict_mean(euler.rho, refine, fine.dim)
    u_e = restrict_mean(euler.velocity(), refine, fine.dim)

    rows = []
    for eps in epsilons:
        prob_eps = build_problem(cfg, t_end=t_end, epsilon=float(eps))
        initial = _build_initial(prob_eps, cfg)
        state = run(initial, prob_eps.params, prob_eps.solver_config)
        rho_k, mom_k, _ = moments(state.field.values, prob_eps.vgrid)
        u_k = bulk_velocity(rho_k, mom_k)
        err_rho, err_u = kinetic_vs_euler_error(rho_k, u_k, rho_e, u_e,
                                                prob_eps.sgrid)
        rows.append((float(eps), err_rho, err_u))
        print(f"epsilon={eps:.3e}  L1_rho={err_rho:.6e}  L1_u={err_u:.6e}")

    with open(os.path.join(out, "hydro_limit.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epsilon", "l1_rho_error", "l1_u_error"])
        for eps, err_rho, err_u in rows:
            writer.writerow([f"{eps:.17g}", f"{err_rho:.17g}", f"{err_u:.17g}"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isenbgk",
        description="Discrete-velocity laboratory for a BGK-type relaxation "
                    "model of isentropic gas dynamics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs_out in (
        ("verify", cmd_verify, False),
        ("run", cmd_run, True),
        ("decay", cmd_decay, True),
        ("hydro-limit", cmd_hydro_limit, True),
    ):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=0,
                       help="cap for the numerical backend's thread pools")
        p.add_argument("--overwrite", action="store_true",
                       help="allow writing into a non-empty output directory")
        p.set_defaults(func=fn, needs_out=needs_out)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _apply_thread_cap(args.threads)
    from .errors import (
        CflError,
        ConfigError,
        CorrectionError,
        DensityFloorError,
        EnvelopeError,
        GridResolutionError,
    )

    try:
        return args.func(args)
    except (ConfigError, GridResolutionError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (EnvelopeError, CflError, CorrectionError, DensityFloorError) as exc:
        print(f"runtime abort: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
