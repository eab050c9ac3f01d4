"""Hot numeric kernels, compiled when available.

``BACKEND`` is ``"cython"`` when the ``_core`` extension imports and
``"python"`` otherwise; both implementations share signatures and results.
Setting ``TRACEPOLY_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _pykernels

_impl = _pykernels
BACKEND = "python"
if os.environ.get("TRACEPOLY_BACKEND", "").lower() != "python":
    try:
        from . import _core as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        pass

jacobi_eigh = _impl.jacobi_eigh
scan_denominators = _impl.scan_denominators
eval_points = _impl.eval_points

__all__ = ["BACKEND", "jacobi_eigh", "scan_denominators", "eval_points"]
