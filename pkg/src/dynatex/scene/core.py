"""Backend selection for the per-pixel scene kernels.

The compiled extension is used when it imported cleanly; DYNATEX_PURE=1
forces the numpy fallback (the benchmark and the backend-equivalence tests
use this switch). Both backends are bit-identical by construction.
"""

import os

from . import _core_np

if os.environ.get("DYNATEX_PURE") == "1":
    _impl = _core_np
else:
    try:
        from . import _scene_core as _impl
    except ImportError:
        _impl = _core_np

BACKEND = _impl.BACKEND

ownership_grid = _impl.ownership_grid
ownership_points = _impl.ownership_points
flow_and_confidence = _impl.flow_and_confidence


def backend_name():
    return BACKEND
