"""Backend selection for the hot numerical kernels.

The compiled extension is preferred; set ``FDMIMO_PURE_PYTHON=1`` to force
the numpy implementation.
"""

from __future__ import annotations

import os

from . import _kernels_py

try:
    if os.environ.get("FDMIMO_PURE_PYTHON"):
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

field_log = _impl.field_log
field_bracket = _impl.field_bracket
inner_batch = _impl.inner_batch

__all__ = ["BACKEND", "field_log", "field_bracket", "inner_batch"]
