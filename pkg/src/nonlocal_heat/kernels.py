"""Kernel backend selection.

The compiled module is used when it imports; setting the environment variable
``NONLOCAL_HEAT_PURE_PYTHON=1`` forces the numpy fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"
mono = _kernels_py.mono
tri = _kernels_py.tri

if os.environ.get("NONLOCAL_HEAT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels_ext
    except ImportError:
        pass
    else:
        mono = _kernels_ext.mono
        tri = _kernels_ext.tri
        BACKEND = "compiled"
