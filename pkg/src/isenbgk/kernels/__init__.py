"""Hot numerical kernels with a compiled core and a NumPy fallback.

The compiled extension is selected at import when present; set the
environment variable ISENBGK_KERNELS to "reference" or "fast" to force a
backend.  Both expose the same functions:

    flux_divergence(f, speed, inv_dx, scheme, out=None)
    maxwellian_batch(rho, u, nodes, pressure_coeff, gamma_m1, half_n,
                     prefactor, out=None)
"""

import os

from . import reference

UPWIND1 = reference.UPWIND1
MUSCL_MINMOD = reference.MUSCL_MINMOD

try:
    from . import _fast
except ImportError:
    _fast = None

_BACKENDS = {"reference": reference}
if _fast is not None:
    _BACKENDS["fast"] = _fast


def available_backends():
    return tuple(sorted(_BACKENDS))


def select(name: str):
    """Switch the active backend; returns the backend module."""
    global _active, _active_name
    if name == "auto":
        name = "fast" if _fast is not None else "reference"
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown kernel backend {name!r}; available: {available_backends()}"
        )
    _active = _BACKENDS[name]
    _active_name = name
    return _active


def backend_name() -> str:
    return _active_name


_active = None
_active_name = ""
select(os.environ.get("ISENBGK_KERNELS", "auto"))


def flux_divergence(f, speed, inv_dx, scheme, out=None):
    return _active.flux_divergence(f, speed, inv_dx, scheme, out)


def maxwellian_batch(rho, u, nodes, pressure_coeff, gamma_m1, half_n, prefactor,
                     out=None):
    return _active.maxwellian_batch(
        rho, u, nodes, pressure_coeff, gamma_m1, half_n, prefactor, out
    )
