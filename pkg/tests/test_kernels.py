"""Backend parity and conservation of the compiled/NumPy kernel pair."""

import numpy as np
import pytest

from isenbgk import kernels
from isenbgk.kernels import reference
from isenbgk.rng import SplitMix64

fast = pytest.importorskip("isenbgk.kernels._fast") \
    if "fast" in kernels.available_backends() else None


def _random_problem(nx=64, m=48, seed=0):
    rng = SplitMix64(seed)
    f = np.abs(rng.symmetric(nx * m)).reshape(nx, m) + 0.1
    speed = 3.0 * rng.symmetric(m)
    speed[m // 2] = 0.0
    return np.ascontiguousarray(f), np.ascontiguousarray(speed)


@pytest.mark.parametrize("scheme", [reference.UPWIND1, reference.MUSCL_MINMOD])
def test_flux_divergence_conserves_column_sums(scheme):
    f, speed = _random_problem()
    div = reference.flux_divergence(f, speed, 2.0, scheme)
    sums = np.sum(div, axis=0)
    assert np.max(np.abs(sums)) <= 1e-12 * np.max(np.abs(f)) * np.max(np.abs(speed))


@pytest.mark.skipif(fast is None, reason="compiled kernels not built")
class TestBackendParity:
    @pytest.mark.parametrize("scheme", [reference.UPWIND1, reference.MUSCL_MINMOD])
    def test_flux_divergence(self, scheme):
        f, speed = _random_problem(seed=3)
        a = reference.flux_divergence(f, speed, 4.2, scheme)
        b = fast.flux_divergence(f, speed, 4.2, scheme)
        assert np.allclose(a, b, rtol=1e-13, atol=1e-15)

    def test_maxwellian_batch(self):
        from isenbgk.equilibrium import VelocityGrid, derive_params

        p = derive_params(1.1, 1)
        grid = VelocityGrid(p, 96)
        rng = SplitMix64(9)
        m = 12
        rho = 0.8 + 0.4 * rng.uniforms(m)
        u = 0.1 * rng.symmetric(m).reshape(m, 1)
        args = (rho, u, grid.nodes, p.pressure_coeff, p.gamma - 1.0,
                p.exponent / 2.0, p.norm_const)
        a = reference.maxwellian_batch(*args)
        b = fast.maxwellian_batch(*args)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-300)

    def test_maxwellian_batch_2d(self):
        from isenbgk.equilibrium import VelocityGrid, derive_params

        p = derive_params(1.2, 2)
        grid = VelocityGrid(p, 24)
        rng = SplitMix64(4)
        m = 6
        rho = 0.9 + 0.2 * rng.uniforms(m)
        u = 0.05 * rng.symmetric(2 * m).reshape(m, 2)
        args = (rho, u, grid.nodes, p.pressure_coeff, p.gamma - 1.0,
                p.exponent / 2.0, p.norm_const)
        assert np.allclose(reference.maxwellian_batch(*args),
                           fast.maxwellian_batch(*args), rtol=1e-12)


def test_select_switches_backend():
    original = kernels.backend_name()
    try:
        assert kernels.select("reference") is reference
        assert kernels.backend_name() == "reference"
        with pytest.raises(ValueError, match="unknown kernel backend"):
            kernels.select("turbo")
    finally:
        kernels.select(original)


def test_zero_speed_column_is_untouched():
    f, speed = _random_problem(seed=1)
    div = reference.flux_divergence(f, speed, 1.0, reference.UPWIND1)
    j = len(speed) // 2
    assert np.all(div[:, j] == 0.0)
