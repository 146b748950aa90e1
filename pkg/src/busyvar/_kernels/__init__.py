"""Hot loop of the simulator, compiled when available.

Set ``BUSYVAR_PURE_PYTHON=1`` to force the pure-Python kernel.
"""

import os

from ._scan_py import scan as python_scan

try:
    from ._scan import scan as compiled_scan
except ImportError:  # extension not built
    compiled_scan = None

if compiled_scan is not None and os.environ.get("BUSYVAR_PURE_PYTHON", "") in ("", "0"):
    scan = compiled_scan
    BACKEND = "cython"
else:
    scan = python_scan
    BACKEND = "python"

__all__ = ["scan", "python_scan", "compiled_scan", "BACKEND"]
