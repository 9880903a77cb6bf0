"""Select the compiled kernel module, falling back to pure Python.

Set ``GRUSHIN_PURE=1`` to force the fallback (used by the benchmark and by the
backend-parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("GRUSHIN_PURE") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]
    except ImportError:  # pragma: no cover - depends on the build
        from . import _kernels_py as kernels

BACKEND: str = kernels.BACKEND

__all__ = ["kernels", "BACKEND"]
