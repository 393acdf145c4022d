"""Optional numba acceleration.

Kernels are written once as plain numpy code. When numba is importable and
``DIRACWEYL_DISABLE_NUMBA`` is unset (or ``0``), they are compiled with
``numba.njit``; otherwise the decorator is a no-op and the same source runs
as ordinary Python.
"""

import os

_FLAG = os.environ.get("DIRACWEYL_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    if _DISABLED:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(func):
    """Compile ``func`` in nopython mode when numba is enabled.

    The undecorated function stays reachable as ``func.py_func`` in both
    modes so callers (the benchmark, mostly) can time either path.
    """
    if HAVE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    func.py_func = func
    return func


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
