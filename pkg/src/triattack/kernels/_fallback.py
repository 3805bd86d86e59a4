"""Pure NumPy implementations of the hot-path kernels."""

import numpy as np


def add_scaled2(base, u, v, cu, cv):
    """base + cu*u + cv*v, elementwise."""
    return base + cu * u + cv * v


def clamp01(a):
    """Copy of a with every element clipped to [0, 1]."""
    return np.clip(a, 0.0, 1.0)


def l2dist(a, b):
    """Euclidean distance between two same-shape arrays."""
    return float(np.linalg.norm((a - b).ravel()))


def project_out(raw, u):
    """Residual of raw after removing its component along the unit vector u.

    Returns (residual, residual_norm)."""
    coef = float(raw.ravel() @ u.ravel())
    res = raw - coef * u
    return res, float(np.linalg.norm(res.ravel()))
