"""Pick the compiled stepping kernel if it was built, else the numpy twin.

Set ``AESE_FORCE_PYTHON=1`` to force the fallback.
"""
from __future__ import annotations

import os

from . import _kernels_py

kernels = _kernels_py
BACKEND = "python"

if os.environ.get("AESE_FORCE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        kernels = _compiled
        BACKEND = "cython"


def get_kernels(name: str | None = None):
    """Return (module, name) for an explicit backend request, or the default."""
    if name is None:
        return kernels, BACKEND
    if name == "python":
        return _kernels_py, "python"
    if name == "cython":
        from . import _kernels as compiled  # type: ignore[attr-defined]

        return compiled, "cython"
    raise ValueError(f"unknown backend {name!r}")


def compiled_available() -> bool:
    try:
        from . import _kernels  # noqa: F401  # type: ignore[attr-defined]
    except ImportError:
        return False
    return True
