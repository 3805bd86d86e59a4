"""Hard-label oracle abstraction.

The attack only ever sees ``predict(image) -> label``. Synthetic oracles
(halfspace, sphere, tiny MLP) have analytically known geometry and back the
test suites; the remote oracle speaks the HTTP wire protocol; the counting
wrapper enforces the query budget.

``canonicalize`` maps a candidate to the image the oracle actually judges
(identity for in-process float oracles, float32 rounding for the taf1 wire
path, 8-bit quantization for the PNG path). The engine queries and scores
the canonical image so the recorded distortion always refers to the image
that produced the label.
"""

import base64
import io
import os
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .errors import BudgetExhausted, OracleUnavailable, ParameterError
from .taf import encode_taf1


class Oracle:
    """Base interface: deterministic top-1 label for a valid image."""

    def predict(self, image: np.ndarray) -> int:
        raise NotImplementedError

    def canonicalize(self, image: np.ndarray) -> np.ndarray:
        """Image as the oracle will judge it. Identity by default."""
        return image


class HalfspaceOracle(Oracle):
    """Linear classifier: positive_label iff w.x + b > 0.

    The optimal L2 perturbation of a sample x is |w.x + b| / ||w||, which
    makes this the ground-truth target for near-optimality checks.
    """

    def __init__(self, w: np.ndarray, b: float, positive_label: int = 1, negative_label: int = 0):
        self.w = np.asarray(w, dtype=np.float64)
        if float(np.linalg.norm(self.w.ravel())) == 0.0:
            raise ParameterError("halfspace normal must be non-zero")
        self.b = float(b)
        self.positive_label = int(positive_label)
        self.negative_label = int(negative_label)

    def predict(self, image: np.ndarray) -> int:
        score = float(self.w.ravel() @ np.asarray(image, dtype=np.float64).ravel()) + self.b
        return self.positive_label if score > 0.0 else self.negative_label

    def signed_distance(self, image: np.ndarray) -> float:
        """Signed L2 distance to the decision hyperplane (positive side > 0)."""
        score = float(self.w.ravel() @ np.asarray(image, dtype=np.float64).ravel()) + self.b
        return score / float(np.linalg.norm(self.w.ravel()))


class SphereOracle(Oracle):
    """Ball classifier: inside_label iff ||image - center|| < radius."""

    def __init__(self, center: np.ndarray, radius: float, inside_label: int = 0, outside_label: int = 1):
        if radius <= 0:
            raise ParameterError("sphere radius must be positive")
        self.center = np.asarray(center, dtype=np.float64)
        self.radius = float(radius)
        self.inside_label = int(inside_label)
        self.outside_label = int(outside_label)

    def predict(self, image: np.ndarray) -> int:
        dist = float(np.linalg.norm((np.asarray(image, dtype=np.float64) - self.center).ravel()))
        return self.inside_label if dist < self.radius else self.outside_label


class TinyMlpOracle(Oracle):
    """Two affine layers with a tanh in between, argmax label.

    Gives the attack a curved, multi-region boundary with no closed-form
    optimum. Weights are fixed at construction; never trained here.
    """

    def __init__(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray):
        self.w1 = np.asarray(w1, dtype=np.float64)  # (in_dim, hidden)
        self.b1 = np.asarray(b1, dtype=np.float64)  # (hidden,)
        self.w2 = np.asarray(w2, dtype=np.float64)  # (hidden, classes)
        self.b2 = np.asarray(b2, dtype=np.float64)  # (classes,)

    def predict(self, image: np.ndarray) -> int:
        x = np.asarray(image, dtype=np.float64).ravel()
        hidden = np.tanh(x @ self.w1 + self.b1)
        logits = hidden @ self.w2 + self.b2
        return int(np.argmax(logits))


@dataclass
class QueryBudget:
    """Query counter with a hard limit."""

    limit: int
    used: int = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used


class CountingOracle(Oracle):
    """Budget-enforcing wrapper: one predict = one unit of budget.

    The check-query-increment sequence runs under a lock, so the counter is
    exact under concurrent use and never exceeds the limit.
    """

    def __init__(self, inner: Oracle, budget: QueryBudget):
        self.inner = inner
        self.budget = budget
        self._lock = threading.Lock()

    def predict(self, image: np.ndarray) -> int:
        with self._lock:
            if self.budget.used >= self.budget.limit:
                raise BudgetExhausted(f"query budget of {self.budget.limit} spent")
            label = self.inner.predict(image)
            self.budget.used += 1
        return label

    def canonicalize(self, image: np.ndarray) -> np.ndarray:
        return self.inner.canonicalize(image)


def counted(oracle: Oracle, budget: QueryBudget) -> CountingOracle:
    """Wrap an oracle with budget accounting."""
    return CountingOracle(oracle, budget)


def is_adversarial(oracle: Oracle, image: np.ndarray, y: int) -> bool:
    """True iff the oracle labels the image differently from y.

    Costs exactly one query when the oracle is counted.
    """
    return oracle.predict(image) != y


def round_float32(image: np.ndarray) -> np.ndarray:
    """Round to the nearest float32 value (what the taf1 wire carries)."""
    return np.asarray(image, dtype=np.float32).astype(np.float64)


def quantize_u8(image: np.ndarray) -> np.ndarray:
    """Quantize to the 8-bit grid (what a PNG round trip yields)."""
    levels = np.round(np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0) * 255.0)
    return levels / 255.0


class QuantizingOracle(Oracle):
    """Wraps an in-process oracle so its judged images match a wire format:
    mode "f32" mirrors the taf1 path, "u8" the PNG path."""

    def __init__(self, inner: Oracle, mode: str = "f32"):
        if mode not in ("f32", "u8"):
            raise ParameterError(f"unknown quantization mode {mode!r}")
        self.inner = inner
        self.mode = mode

    def canonicalize(self, image: np.ndarray) -> np.ndarray:
        if self.mode == "f32":
            return round_float32(image)
        return quantize_u8(image)

    def predict(self, image: np.ndarray) -> int:
        return self.inner.predict(self.canonicalize(image))


def _encode_png(image: np.ndarray) -> bytes:
    from PIL import Image

    u8 = np.round(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)
    if u8.shape[2] == 1:
        pil = Image.fromarray(u8[:, :, 0], mode="L")
    elif u8.shape[2] == 3:
        pil = Image.fromarray(u8, mode="RGB")
    else:
        raise ParameterError(f"PNG payloads need 1 or 3 channels, got {u8.shape[2]}")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


class RemoteOracle(Oracle):
    """Client for the HTTP prediction protocol.

    Request: POST {base_url}/predict with JSON {"format": "taf1"|"png",
    "image": "<base64>"}. Response: 200 with {"label": <non-negative int>}.
    Anything else is OracleUnavailable after the retry schedule. Retries
    never consume attack budget because no label was obtained.
    """

    def __init__(
        self,
        base_url: str,
        fmt: str = "taf1",
        timeout: float = 10.0,
        retries: int = 3,
        backoff: tuple = (1.0, 2.0, 4.0),
        token: str | None = None,
        session: requests.Session | None = None,
    ):
        if fmt not in ("taf1", "png"):
            raise ParameterError(f"unknown payload format {fmt!r}")
        self.base_url = base_url.rstrip("/")
        self.fmt = fmt
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.token = token if token is not None else os.environ.get("TA_ORACLE_TOKEN")
        self.session = session if session is not None else requests.Session()

    def canonicalize(self, image: np.ndarray) -> np.ndarray:
        if self.fmt == "taf1":
            return round_float32(image)
        return quantize_u8(image)

    def _payload(self, image: np.ndarray) -> bytes:
        if self.fmt == "taf1":
            return encode_taf1(np.clip(image, 0.0, 1.0))
        return _encode_png(image)

    def predict(self, image: np.ndarray) -> int:
        body = {
            "format": self.fmt,
            "image": base64.b64encode(self._payload(image)).decode("ascii"),
        }
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        last_error = "no attempt made"
        for attempt in range(self.retries + 1):
            try:
                resp = self.session.post(
                    f"{self.base_url}/predict", json=body, headers=headers, timeout=self.timeout
                )
                if resp.status_code == 200:
                    label = self._parse_label(resp)
                    if label is not None:
                        return label
                    last_error = f"non-conforming body: {resp.text[:200]!r}"
                else:
                    last_error = f"HTTP {resp.status_code}: {resp.text[:200]!r}"
            except requests.RequestException as exc:
                last_error = f"transport failure: {exc}"
            if attempt < self.retries:
                time.sleep(self.backoff[min(attempt, len(self.backoff) - 1)])
        raise OracleUnavailable(f"{self.base_url}/predict: {last_error}")

    @staticmethod
    def _parse_label(resp) -> int | None:
        try:
            data = resp.json()
        except ValueError:
            return None
        if not isinstance(data, dict):
            return None
        label = data.get("label")
        if isinstance(label, bool) or not isinstance(label, int) or label < 0:
            return None
        return label
