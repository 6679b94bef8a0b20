"""Selection between numba-compiled kernels and the pure-numpy fallback.

Set ``DIRSBM_DISABLE_NUMBA=1`` to force the numpy path (useful for
debugging, or on platforms where numba is unavailable).
"""

from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("DIRSBM_DISABLE_NUMBA", "").strip().lower() in _FALSY


def njit(func):
    """Compile ``func`` in nopython mode when numba is importable; otherwise return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return _numba.njit(cache=True, nogil=True)(func)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
