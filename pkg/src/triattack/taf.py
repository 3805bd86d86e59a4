"""taf1 binary tensor format.

Layout: magic bytes "TAF1", three unsigned 32-bit little-endian integers
H, W, C, then H*W*C IEEE-754 32-bit little-endian floats in row-major
(row, column, channel) order.
"""

import struct

import numpy as np

from .errors import DimensionError

MAGIC = b"TAF1"
_HEADER = struct.Struct("<4sIII")


def encode_taf1(tensor: np.ndarray) -> bytes:
    """Serialize an H x W x C array to taf1 bytes (values cast to float32)."""
    arr = np.asarray(tensor)
    if arr.ndim != 3:
        raise DimensionError(f"taf1 stores H x W x C tensors, got shape {arr.shape}")
    h, w, c = arr.shape
    header = _HEADER.pack(MAGIC, h, w, c)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return header + payload


def decode_taf1(data: bytes) -> np.ndarray:
    """Parse taf1 bytes into a float64 H x W x C array."""
    if len(data) < _HEADER.size:
        raise ValueError("taf1 payload shorter than header")
    magic, h, w, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad taf1 magic {magic!r}")
    n = h * w * c
    expected = _HEADER.size + 4 * n
    if len(data) != expected:
        raise ValueError(f"taf1 payload length {len(data)}, expected {expected} for {h}x{w}x{c}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size, count=n)
    return flat.astype(np.float64).reshape(h, w, c)


def write_taf1(path, tensor: np.ndarray) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_taf1(tensor))


def read_taf1(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return decode_taf1(fh.read())
