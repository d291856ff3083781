"""Pick the kernel implementation once, at import.

The compiled extension is preferred. Setting ``DICKEBELL_PURE_PYTHON=1``
forces the pure-Python twin, which is also used when the extension is absent.
"""
import os

COMPILED = False

if os.environ.get("DICKEBELL_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
else:
    try:
        from . import _kernels as kernels
        COMPILED = True
    except ImportError:
        from . import _pykernels as kernels

NAME = "compiled" if COMPILED else "python"

__all__ = ["kernels", "COMPILED", "NAME"]
