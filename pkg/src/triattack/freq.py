"""Orthonormal 2-D DCT per channel, low-frequency masks, and sparse random
direction sampling.

The orthonormal scaling makes the transform an isometry (Parseval), so L2
distances in coefficient space equal L2 distances in pixel space. That is
what lets the triangle geometry operate on coefficients while the distortion
metric is measured on pixels.
"""

import math

import numpy as np
from scipy.fft import dctn, idctn

from .errors import DimensionError, ParameterError


def check_image_shape(arr: np.ndarray) -> None:
    """Require an H x W x C array with H, W >= 2."""
    if arr.ndim != 3:
        raise DimensionError(f"expected H x W x C array, got shape {arr.shape}")
    h, w, _ = arr.shape
    if h < 2 or w < 2:
        raise DimensionError(f"2-D DCT needs H >= 2 and W >= 2, got {h}x{w}")


def dct2(image: np.ndarray) -> np.ndarray:
    """Orthonormal type-II 2-D DCT applied independently per channel."""
    image = np.asarray(image, dtype=np.float64)
    check_image_shape(image)
    return dctn(image, type=2, norm="ortho", axes=(0, 1))


def idct2(freq: np.ndarray) -> np.ndarray:
    """Exact inverse of dct2. Output is not clamped to [0, 1]."""
    freq = np.asarray(freq, dtype=np.float64)
    check_image_shape(freq)
    return idctn(freq, type=2, norm="ortho", axes=(0, 1))


def low_freq_mask(shape, ratio: float) -> np.ndarray:
    """Boolean mask selecting the top-left floor(ratio*H) x floor(ratio*W)
    coefficient block in every channel."""
    h, w, c = shape
    if not (0.0 < ratio <= 1.0):
        raise ParameterError(f"frequency ratio must be in (0, 1], got {ratio}")
    rows = math.floor(ratio * h)
    cols = math.floor(ratio * w)
    if rows < 1 or cols < 1:
        raise ParameterError(
            f"ratio {ratio} selects an empty block on a {h}x{w} image "
            "(need ratio*H >= 1 and ratio*W >= 1)"
        )
    mask = np.zeros((h, w, c), dtype=bool)
    mask[:rows, :cols, :] = True
    return mask


def sample_direction(mask: np.ndarray, d: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-norm coefficient tensor with exactly d non-zeros at distinct
    uniformly chosen masked coordinates, values drawn from U[-1, 1] \\ {0}."""
    if d < 1:
        raise ParameterError(f"direction dimension must be >= 1, got {d}")
    support = np.flatnonzero(mask)
    if d > support.size:
        raise ParameterError(f"d={d} exceeds mask population {support.size}")
    picks = rng.choice(support.size, size=d, replace=False)
    values = rng.uniform(-1.0, 1.0, size=d)
    while np.any(values == 0.0):
        zeros = values == 0.0
        values[zeros] = rng.uniform(-1.0, 1.0, size=int(zeros.sum()))
    direction = np.zeros(mask.shape, dtype=np.float64)
    direction.ravel()[support[picks]] = values
    direction /= np.linalg.norm(values)
    return direction
