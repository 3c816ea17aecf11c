# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels.

Mirrors kernels.reference operation for operation; the two backends agree
to rounding (libm pow vs NumPy's vectorized pow may differ in the last
ulp).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, pow

UPWIND1 = 0
MUSCL_MINMOD = 1


cdef inline double _minmod(double a, double b) nogil:
    if a * b > 0.0:
        return a if fabs(a) < fabs(b) else b
    return 0.0


def flux_divergence(double[:, ::1] f, double[::1] speed, double inv_dx,
                    int scheme, out=None):
    """Conservative upwind flux divergence along axis 0, periodic."""
    cdef Py_ssize_t nx = f.shape[0], m = f.shape[1]
    if out is None:
        out = np.empty((nx, m), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef double[:, ::1] phi = np.empty((nx, m), dtype=np.float64)
    cdef Py_ssize_t i, j, im, ip, ipp
    cdef double s, sl, sr, left, right
    with nogil:
        if scheme == 0:
            for i in range(nx):
                ip = i + 1 if i + 1 < nx else 0
                for j in range(m):
                    s = speed[j]
                    if s > 0.0:
                        phi[i, j] = s * f[i, j]
                    elif s < 0.0:
                        phi[i, j] = s * f[ip, j]
                    else:
                        phi[i, j] = 0.0
        else:
            for i in range(nx):
                im = i - 1 if i > 0 else nx - 1
                ip = i + 1 if i + 1 < nx else 0
                ipp = ip + 1 if ip + 1 < nx else 0
                for j in range(m):
                    s = speed[j]
                    if s > 0.0:
                        sl = _minmod(f[i, j] - f[im, j], f[ip, j] - f[i, j])
                        left = f[i, j] + 0.5 * sl
                        phi[i, j] = s * left
                    elif s < 0.0:
                        sr = _minmod(f[ip, j] - f[i, j], f[ipp, j] - f[ip, j])
                        right = f[ip, j] - 0.5 * sr
                        phi[i, j] = s * right
                    else:
                        phi[i, j] = 0.0
        for i in range(nx):
            im = i - 1 if i > 0 else nx - 1
            for j in range(m):
                res[i, j] = (phi[i, j] - phi[im, j]) * inv_dx
    return out


def maxwellian_batch(double[::1] rho, double[:, ::1] u, double[:, ::1] nodes,
                     double pressure_coeff, double gamma_m1, double half_n,
                     double prefactor, out=None):
    """Equilibrium profiles for a batch of macro states; see reference."""
    cdef Py_ssize_t m = rho.shape[0], nv = nodes.shape[0], d = nodes.shape[1]
    if out is None:
        out = np.empty((m, nv), dtype=np.float64)
    cdef double[:, ::1] res = out
    cdef Py_ssize_t i, j, k
    cdef double amp, base, dv
    with nogil:
        for i in range(m):
            amp = pressure_coeff * pow(rho[i], gamma_m1)
            for j in range(nv):
                base = amp
                for k in range(d):
                    dv = nodes[j, k] - u[i, k]
                    base -= dv * dv
                if base > 0.0:
                    res[i, j] = prefactor * pow(base, half_n)
                else:
                    res[i, j] = 0.0
    return out
