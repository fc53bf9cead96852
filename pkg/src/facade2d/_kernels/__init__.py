"""Kernel backend selection: compiled extension when available, NumPy fallback otherwise.

Set ``FACADE2D_KERNELS=python`` to force the fallback or ``=cython`` to fail
hard if the extension did not build.  ``BACKEND`` records the active choice.
"""

import os

_requested = os.environ.get("FACADE2D_KERNELS", "").strip().lower()
if _requested not in ("", "cython", "python"):
    raise ImportError(f"FACADE2D_KERNELS must be 'cython' or 'python', got {_requested!r}")

if _requested == "python":
    from .pure import stencil_step, thomas_many
    BACKEND = "python"
else:
    try:
        from ._stencil import stencil_step, thomas_many
        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        from .pure import stencil_step, thomas_many
        BACKEND = "python"

__all__ = ["BACKEND", "stencil_step", "thomas_many"]
