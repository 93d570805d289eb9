"""Kernel backend dispatch.

Tries the compiled extension first and falls back to the NumPy
implementations. Set BRAINALIGN_NO_EXT=1 to force the pure backend.
Both backends produce results equal to within float64 rounding; runs
are bit-reproducible on a fixed backend.
"""

from __future__ import annotations

import os

from . import _kernels_np

if os.environ.get("BRAINALIGN_NO_EXT", "") not in ("", "0"):
    _impl = _kernels_np
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_np

BACKEND: str = _impl.BACKEND

pool2x2 = _impl.pool2x2
silu = _impl.silu
silu_grad = _impl.silu_grad
corrupt_rows = _impl.corrupt_rows
masked_sq_err = _impl.masked_sq_err
adamw_update = _impl.adamw_update
iou_batch = _impl.iou_batch

__all__ = [
    "BACKEND",
    "pool2x2",
    "silu",
    "silu_grad",
    "corrupt_rows",
    "masked_sq_err",
    "adamw_update",
    "iou_batch",
]
