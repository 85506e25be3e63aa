"""Kernel backend selection.

The compiled Cython kernels are used when the extension module built from
``_kernels.pyx`` is importable; otherwise the numpy fallback in
``_kernels_py`` takes over transparently.  Set ``DEPSIM_KERNELS=python`` or
``DEPSIM_KERNELS=cython`` to force a backend (forcing cython raises if the
extension is missing).
"""

from __future__ import annotations

import os

_requested = os.environ.get("DEPSIM_KERNELS", "auto").strip().lower()

if _requested in ("python", "py"):
    from . import _kernels_py as kernels

    BACKEND = "python"
elif _requested in ("cython", "c", "compiled"):
    from . import _kernels as kernels  # type: ignore[no-redef]

    BACKEND = "cython"
elif _requested in ("auto", ""):
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as kernels  # type: ignore[no-redef]

        BACKEND = "python"
else:
    raise RuntimeError(f"unknown DEPSIM_KERNELS value {_requested!r}")

__all__ = ["kernels", "BACKEND"]
