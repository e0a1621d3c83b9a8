"""Backend selection for the numeric kernels.

The compiled extension is used when it imports; otherwise the pure-Python
module is loaded. Set ``SCHURFIT_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("SCHURFIT_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

strip_sum = _impl.strip_sum
det = _impl.det
bialternant = _impl.bialternant

__all__ = ["BACKEND", "bialternant", "det", "strip_sum"]
