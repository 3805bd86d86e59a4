# cython: boundscheck=False, wraparound=False, cdivision=True
"""Fused C kernels for the per-query hot path.

Each kernel does one pass over the flattened arrays instead of the several
temporaries the NumPy expressions allocate. Inputs must be float64; shapes
must match. Results agree with the NumPy fallback to floating-point
rounding (summation order differs), not bit-for-bit.

Clamping is deliberately absent: np.clip is already a single fused pass and
beats a scalar loop, so the fallback implementation is used on both paths.
"""

from libc.math cimport sqrt

import numpy as np

cimport numpy as cnp

cnp.import_array()


def add_scaled2(base, u, v, double cu, double cv):
    """base + cu*u + cv*v, elementwise."""
    cdef cnp.ndarray base_a = np.ascontiguousarray(base, dtype=np.float64)
    cdef double[::1] b = base_a.ravel()
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64).ravel()
    cdef Py_ssize_t n = b.shape[0]
    if uu.shape[0] != n or vv.shape[0] != n:
        raise ValueError("add_scaled2: size mismatch")
    out = np.empty_like(base_a)
    cdef double[::1] o = out.ravel()
    cdef Py_ssize_t i
    for i in range(n):
        o[i] = b[i] + cu * uu[i] + cv * vv[i]
    return out


def l2dist(a, b):
    """Euclidean distance between two same-shape arrays."""
    cdef double[::1] x = np.ascontiguousarray(a, dtype=np.float64).ravel()
    cdef double[::1] y = np.ascontiguousarray(b, dtype=np.float64).ravel()
    cdef Py_ssize_t n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError("l2dist: size mismatch")
    cdef double s = 0.0, d
    cdef Py_ssize_t i
    for i in range(n):
        d = x[i] - y[i]
        s += d * d
    return sqrt(s)


def project_out(raw, u):
    """Residual of raw after removing its component along the unit vector u.

    Returns (residual, residual_norm)."""
    cdef cnp.ndarray raw_a = np.ascontiguousarray(raw, dtype=np.float64)
    cdef double[::1] r = raw_a.ravel()
    cdef double[::1] uu = np.ascontiguousarray(u, dtype=np.float64).ravel()
    cdef Py_ssize_t n = r.shape[0]
    if uu.shape[0] != n:
        raise ValueError("project_out: size mismatch")
    cdef double coef = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        coef += r[i] * uu[i]
    out = np.empty_like(raw_a)
    cdef double[::1] o = out.ravel()
    cdef double s = 0.0, val
    for i in range(n):
        val = r[i] - coef * uu[i]
        o[i] = val
        s += val * val
    return out, sqrt(s)
