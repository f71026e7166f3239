"""Numba switch.

Set ``MMGMC_DISABLE_NUMBA=1`` before import to run every kernel through its
pure-numpy implementation. Numba is also skipped silently when it cannot be
imported.
"""
import logging
import os

logger = logging.getLogger(__name__)

_FLAG = os.environ.get("MMGMC_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    logger.warning("numba not importable; using numpy kernels")

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` in nopython mode; ``func.py_func`` is always the
    uncompiled function so tests can exercise both."""
    if numba is None:
        func.py_func = func
        return func
    return numba.njit(cache=True, nogil=True)(func)
