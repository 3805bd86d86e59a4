"""taf1 binary tensor decoding (server-side copy).

The server deliberately reimplements the format instead of importing the
attack toolkit: the wire protocol is the only shared surface, and keeping
the implementations independent is what makes the cross-implementation
equivalence tests meaningful.

Layout: magic "TAF1", unsigned 32-bit little-endian H, W, C, then H*W*C
IEEE-754 32-bit little-endian floats in row-major (row, column, channel)
order.
"""

import struct

import numpy as np

MAGIC = b"TAF1"
_HEADER = struct.Struct("<4sIII")


class TafError(ValueError):
    """Malformed taf1 payload."""


def decode_taf1(data: bytes) -> np.ndarray:
    if len(data) < _HEADER.size:
        raise TafError("taf1 payload shorter than header")
    magic, h, w, c = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise TafError(f"bad taf1 magic {magic!r}")
    n = h * w * c
    expected = _HEADER.size + 4 * n
    if len(data) != expected:
        raise TafError(f"taf1 payload length {len(data)}, expected {expected} for {h}x{w}x{c}")
    flat = np.frombuffer(data, dtype="<f4", offset=_HEADER.size, count=n)
    return flat.astype(np.float64).reshape(h, w, c)


def encode_taf1(tensor: np.ndarray) -> bytes:
    arr = np.asarray(tensor)
    if arr.ndim != 3:
        raise TafError(f"taf1 stores H x W x C tensors, got shape {arr.shape}")
    h, w, c = arr.shape
    return _HEADER.pack(MAGIC, h, w, c) + np.ascontiguousarray(arr, dtype="<f4").tobytes()
