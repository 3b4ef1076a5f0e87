"""Select the compiled kernels when available, else the NumPy fallback.

Set ``DIVALIGN_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _purepy

BACKEND = "python"
kernels = _purepy

if not os.environ.get("DIVALIGN_PURE"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get(name: str):
    """Kernel module by name: ``"cython"`` or ``"python"``."""
    if name == "python":
        return _purepy
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available() -> list[str]:
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names
