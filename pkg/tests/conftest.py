"""Shared builders: analytic oracle instances and the tiny-MLP fixture."""

import base64
import json
import os

import numpy as np
import pytest

import triattack as ta
from triattack.taf import decode_taf1

FIXTURES = os.path.join(os.path.dirname(__file__), "..", "fixtures")
DATA = os.path.join(os.path.dirname(__file__), "data")


class ConstantOracle(ta.Oracle):
    """Labels everything with one fixed class."""

    def __init__(self, label):
        self.label = label

    def predict(self, image):
        return self.label


def make_halfspace_instance(seed, shape=(32, 32, 3), ratio=0.1, k=0.75):
    """Halfspace whose normal lives in the low-frequency mask, with the
    benign sample at analytic distance k/sqrt(12) from the boundary.

    The benign sample is redrawn until its projection is at least the
    uniform-distribution mean, which keeps the adversarial region's mass
    above ~20% so random initialization cannot plausibly fail.

    Returns (x, oracle, optimal_l2_distance).
    """
    h, w, _ = shape
    rows, cols = int(ratio * h), int(ratio * w)
    rng = np.random.default_rng([seed, 7])
    w_f = np.zeros(shape)
    w_f[:rows, :cols, :] = rng.normal(size=(rows, cols, shape[2]))
    w_f /= np.linalg.norm(w_f)
    normal = ta.idct2(w_f)
    mean_proj = float(normal.ravel() @ np.full(normal.size, 0.5))
    while True:
        x = rng.random(shape)
        proj = float(normal.ravel() @ x.ravel())
        if proj >= mean_proj:
            break
    dstar = k / np.sqrt(12.0)
    return x, ta.HalfspaceOracle(normal, -proj + dstar), dstar


def make_sphere_instance(seed, shape=(32, 32, 3)):
    """Ball oracle with the benign sample near the center; adversarial
    region is the outside, which uniform draws hit almost surely."""
    rng = np.random.default_rng([seed, 13])
    x = rng.random(shape)
    center = x + rng.normal(0.0, 0.01, size=shape)
    radius = 1.0 + rng.random()
    return x, ta.SphereOracle(center, radius)


@pytest.fixture(scope="session")
def tiny_mlp():
    """(oracle, input_shape) from the committed fixture file."""
    with open(os.path.join(FIXTURES, "tiny_mlp.json")) as fh:
        spec = json.load(fh)

    def tensor(key):
        return decode_taf1(base64.b64decode(spec[key]))

    oracle = ta.TinyMlpOracle(
        tensor("w1")[:, :, 0],
        tensor("b1")[:, 0, 0],
        tensor("w2")[:, :, 0],
        tensor("b2")[:, 0, 0],
    )
    return oracle, tuple(spec["input_shape"])
