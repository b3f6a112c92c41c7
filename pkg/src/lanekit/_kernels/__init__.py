"""Hot-loop kernels with a compiled core and a pure fallback.

The compiled extension (``lanekit._kernels._native``) is preferred; when it
is missing, or when ``LANEKIT_PURE`` is set in the environment, the numpy
implementations from ``_fallback`` are used instead.  ``BACKEND`` records
which one is active.
"""

import os

if os.environ.get("LANEKIT_PURE"):
    from . import _fallback as _impl
    BACKEND = "fallback"
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
        BACKEND = "native"
    except ImportError:
        from . import _fallback as _impl
        BACKEND = "fallback"

segment_distance_field = _impl.segment_distance_field
edt_sq = _impl.edt_sq
chamfer_sq = _impl.chamfer_sq
zhang_suen = _impl.zhang_suen

__all__ = [
    "BACKEND",
    "segment_distance_field",
    "edt_sq",
    "chamfer_sq",
    "zhang_suen",
]
