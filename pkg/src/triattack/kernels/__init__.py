"""Hot-path array kernels with a compiled fast path.

The Cython extension (_core) is built at install time when a compiler is
available; otherwise the NumPy fallback is used. Set TRIATTACK_PURE_PYTHON=1
to force the fallback. The two backends agree to floating-point rounding
(summation order differs), so attack runs are reproducible bit-for-bit only
within one backend.
"""

import os

from . import _fallback

if os.environ.get("TRIATTACK_PURE_PYTHON") == "1":
    _impl = _fallback
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _fallback

add_scaled2 = _impl.add_scaled2
l2dist = _impl.l2dist
project_out = _impl.project_out
# np.clip is already one fused SIMD pass; a hand-written loop loses to it,
# so clamping always comes from the fallback.
clamp01 = _fallback.clamp01


def backend() -> str:
    """Name of the active kernel backend: "compiled" or "python"."""
    return "python" if _impl is _fallback else "compiled"
