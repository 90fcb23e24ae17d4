"""Backend selection for the hot Picard kernels.

The compiled extension is preferred; set ``VA_ENGINE_PURE_PYTHON=1`` to force
the numpy fallback (useful for benchmarking and debugging).
"""

import os

from . import _kernels_py

compiled = None
if os.environ.get("VA_ENGINE_PURE_PYTHON", "") != "1":
    try:
        from . import _kernels as compiled
    except ImportError:  # extension not built
        compiled = None

BACKEND = "cython" if compiled is not None else "python"
_impl = compiled if compiled is not None else _kernels_py

picard_sweep = _impl.picard_sweep
residuals = _impl.residuals


def backend(name: str):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if compiled is None:
            raise ImportError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {name!r}")
