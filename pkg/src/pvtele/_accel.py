"""Numba switch.

Kernels are written in the nopython subset and compiled with ``numba.njit``
unless the environment variable ``PVTELE_DISABLE_NUMBA`` is set to a truthy
value (or numba is not importable), in which case the plain Python/numpy
functions are used unchanged.
"""

import os

_FLAG = "PVTELE_DISABLE_NUMBA"


def _disabled():
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


try:
    if _disabled():
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def jit(func):
    """Compile ``func`` with numba when enabled; return it untouched otherwise.

    The compiled dispatcher keeps the original function on ``.py_func`` so the
    benchmark can time both paths in one process.
    """
    if not HAS_NUMBA:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend():
    return "numba" if HAS_NUMBA else "python"
