"""Backend selection for the hot loops.

The compiled extension ``lpball._kernels`` is used when it imports; otherwise
the numpy module ``lpball._kernels_py`` takes over.  Setting the environment
variable ``LPBALL_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()

if _compiled is not None and os.environ.get("LPBALL_PURE_PYTHON", "") in ("", "0"):
    _impl: ModuleType = _compiled
    BACKEND = "cython"
else:
    _impl = _kernels_py
    BACKEND = "python"

power_sums = _impl.power_sums
ks_sorted_gaussian = _impl.ks_sorted_gaussian
ks_two_sorted = _impl.ks_two_sorted


def available_backends() -> dict[str, ModuleType]:
    """Every importable backend by name, compiled first when present."""
    found = {}
    if _compiled is not None:
        found["cython"] = _compiled
    found["python"] = _kernels_py
    return found
