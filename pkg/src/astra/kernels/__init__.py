"""Hot-kernel backend selection.

The compiled extension (`astra.kernels._native`, built from Cython) is
preferred when present; otherwise the NumPy backend is used. Set
``ASTRA_KERNEL_BACKEND=numpy`` or ``=native`` to force one.
"""

from __future__ import annotations

import os

from astra.kernels import numpy_backend

try:
    from astra.kernels import _native
except ImportError:
    _native = None

_requested = os.environ.get("ASTRA_KERNEL_BACKEND", "").strip().lower()
if _requested == "numpy":
    _active = numpy_backend
elif _requested == "native":
    if _native is None:
        raise ImportError(
            "ASTRA_KERNEL_BACKEND=native but the compiled kernel is not built; "
            "reinstall with a C compiler available"
        )
    _active = _native
else:
    _active = _native if _native is not None else numpy_backend

backend_name = "native" if _active is _native and _native is not None else "numpy"

gray = _active.gray
ncc_at = _active.ncc_at
ncc_map = _active.ncc_map
ncc_map_many = _active.ncc_map_many
ssim_mean = _active.ssim_mean
fnv1a64 = _active.fnv1a64
gaussian_window = numpy_backend.gaussian_window

VAR_EPS = numpy_backend.VAR_EPS
SSIM_WIN = numpy_backend.SSIM_WIN

__all__ = [
    "backend_name",
    "gray",
    "ncc_at",
    "ncc_map",
    "ncc_map_many",
    "ssim_mean",
    "fnv1a64",
    "gaussian_window",
    "VAR_EPS",
    "SSIM_WIN",
]
