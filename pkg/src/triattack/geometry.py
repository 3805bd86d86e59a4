"""Candidate-triangle mathematics.

A step of the attack places a triangle with vertices at the benign sample x,
the current adversary, and a trial point, all inside a 2-D plane of
coefficient space. By the law of sines the trial point's distance to x is
delta * sin(alpha + beta) / sin(alpha), where delta is the current distance,
alpha the angle at the trial vertex and beta the angle at x. The trial point
is strictly closer than the current adversary iff beta + 2*alpha > pi.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import DegeneratePlaneError, InfeasibleAngleError, ParameterError

# Relative residual below which the sampled direction counts as parallel to
# the adversary direction and the plane is degenerate.
PARALLEL_TOL = 1e-9


@dataclass(frozen=True)
class PlaneBasis:
    """Orthonormal basis of the per-iteration 2-D search plane.

    u_hat points from the benign sample toward the current adversary; v_hat
    is the orthogonal completion inside span{u_hat, sampled direction}.
    """

    u_hat: np.ndarray
    v_hat: np.ndarray


@dataclass(frozen=True)
class TriangleAngles:
    """Angle pair (alpha at the trial vertex, signed beta at the benign
    sample). The sign of beta selects one of the two mirror triangles;
    beta = 0 is the degenerate no-rotation case."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.alpha < math.pi):
            raise ParameterError(f"alpha must be in (0, pi), got {self.alpha}")
        if abs(self.beta) > math.pi / 2:
            raise ParameterError(f"|beta| must be <= pi/2, got {self.beta}")
        if self.alpha + abs(self.beta) >= math.pi:
            raise ParameterError(
                f"alpha + |beta| = {self.alpha + abs(self.beta)} >= pi is not a triangle"
            )


def make_plane(x_f: np.ndarray, xadv_f: np.ndarray, raw_dir: np.ndarray) -> PlaneBasis:
    """Orthonormalize (adversary direction, sampled direction) by
    Gram-Schmidt. Raises DegeneratePlaneError when raw_dir is parallel to
    the adversary direction; the caller resamples at no query cost."""
    offset_norm = kernels.l2dist(xadv_f, x_f)
    if offset_norm == 0.0:
        raise ParameterError("adversary coincides with the benign sample")
    raw_norm = float(np.linalg.norm(np.ravel(raw_dir)))
    if raw_norm == 0.0:
        raise ParameterError("sampled direction has zero norm")
    u_hat = (xadv_f - x_f) / offset_norm
    residual, res_norm = kernels.project_out(raw_dir, u_hat)
    if res_norm < PARALLEL_TOL * raw_norm:
        raise DegeneratePlaneError("sampled direction parallel to adversary direction")
    return PlaneBasis(u_hat, residual / res_norm)


def scale_ratio(alpha: float, beta_abs: float) -> float:
    """Distance ratio new/current for a candidate triangle:
    sin(alpha + beta) / sin(alpha). Equals 1 at beta = 0 and is < 1 exactly
    when beta + 2*alpha > pi."""
    if not (0.0 < alpha < math.pi):
        raise ParameterError(f"alpha must be in (0, pi), got {alpha}")
    if not (0.0 <= beta_abs < math.pi - alpha):
        raise ParameterError(
            f"beta must be in [0, pi - alpha) = [0, {math.pi - alpha}), got {beta_abs}"
        )
    return math.sin(alpha + beta_abs) / math.sin(alpha)


def candidate_vertex(
    x_f: np.ndarray,
    xadv_f: np.ndarray,
    plane: PlaneBasis,
    angles: TriangleAngles,
) -> np.ndarray:
    """Third vertex of the candidate triangle: rotate the adversary offset by
    beta around x inside the plane and rescale by the law-of-sines ratio."""
    delta = kernels.l2dist(xadv_f, x_f)
    beta_abs = abs(angles.beta)
    sign = 1.0 if angles.beta >= 0 else -1.0
    r = scale_ratio(angles.alpha, beta_abs)
    cu = delta * r * math.cos(beta_abs)
    cv = delta * r * sign * math.sin(beta_abs)
    return kernels.add_scaled2(x_f, plane.u_hat, plane.v_hat, cu, cv)


def beta_bounds(alpha: float, beta_min: float) -> tuple[float, float]:
    """Search interval for beta: [max(pi - 2*alpha, beta_min),
    min(pi - alpha, pi/2)). The upper cap at pi/2 keeps the candidate on the
    adversary's side of x; pi - alpha keeps the triangle valid."""
    lo = max(math.pi - 2.0 * alpha, beta_min)
    hi = min(math.pi - alpha, math.pi / 2.0)
    if lo >= hi:
        raise InfeasibleAngleError(
            f"empty beta interval [{lo}, {hi}) for alpha={alpha}, beta_min={beta_min}"
        )
    return lo, hi
