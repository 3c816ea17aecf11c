#!/usr/bin/env python3
"""Benchmark the compiled kernels against the NumPy fallback.

Times the two hot kernels on solver-shaped data and a short end-to-end
relaxation run with each backend:

    python benchmarks/bench_kernels.py
"""

import time

import numpy as np

from isenbgk import kernels
from isenbgk.discretization import SpatialGrid
from isenbgk.equilibrium import VelocityGrid, derive_params
from isenbgk.initial import build_initial
from isenbgk.rng import SplitMix64
from isenbgk.solver import SolverConfig, run


def _time(fn, repeat=20):
    fn()  # warm up
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_flux(backend, nx=128, m=256, scheme=kernels.MUSCL_MINMOD):
    rng = SplitMix64(1)
    f = np.abs(rng.symmetric(nx * m)).reshape(nx, m)
    speed = 5.0 * rng.symmetric(m)
    out = np.empty_like(f)
    return _time(lambda: backend.flux_divergence(f, speed, 20.0, scheme, out))


def bench_maxwellian(backend, cells=128, points=256):
    params = derive_params(1.1, 1)
    grid = VelocityGrid(params, points)
    rng = SplitMix64(2)
    rho = 0.9 + 0.2 * rng.uniforms(cells)
    u = 0.05 * rng.symmetric(cells).reshape(cells, 1)
    out = np.empty((cells, points))
    return _time(lambda: backend.maxwellian_batch(
        rho, u, grid.nodes, params.pressure_coeff, params.gamma - 1.0,
        params.exponent / 2.0, params.norm_const, out))


def bench_solver(backend_name, t_end=2.0):
    kernels.select(backend_name)
    params = derive_params(1.1, 1)
    vgrid = VelocityGrid(params, 256)
    sgrid = SpatialGrid(1, 128)
    field = build_initial(params, sgrid, vgrid, "density_mode", amplitude=1e-3)
    cfg = SolverConfig(t_end=t_end, output_interval=t_end)
    t0 = time.perf_counter()
    state = run(field, params, cfg)
    return (time.perf_counter() - t0) / state.steps


def main():
    names = kernels.available_backends()
    if "fast" not in names:
        print("compiled kernels not built; only the NumPy backend is available")
    backends = {name: kernels.select(name) for name in names}

    rows = []
    for label, fn in [
        ("flux divergence, upwind (128x256)",
         lambda b: bench_flux(b, scheme=kernels.UPWIND1)),
        ("flux divergence, MUSCL (128x256)",
         lambda b: bench_flux(b, scheme=kernels.MUSCL_MINMOD)),
        ("equilibrium profiles (128x256)", bench_maxwellian),
    ]:
        times = {name: fn(backend) for name, backend in backends.items()}
        rows.append((label, times))

    solver_times = {name: bench_solver(name) for name in names}
    rows.append(("full solver step (128x256)", solver_times))
    kernels.select("auto")

    width = max(len(r[0]) for r in rows) + 2
    header = f"{'kernel':<{width}}" + "".join(f"{n:>14}" for n in names)
    if len(names) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, times in rows:
        line = f"{label:<{width}}"
        for name in names:
            line += f"{times[name] * 1e6:>11.1f} us"
        if len(names) == 2:
            line += f"{times['reference'] / times['fast']:>9.2f}x"
        print(line)


if __name__ == "__main__":
    main()
