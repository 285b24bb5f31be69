"""Backend selection for the hot numeric kernels.

The numba path is used when numba imports cleanly and the environment
variable ``CORRPOST_DISABLE_NUMBA`` is unset or falsy.  Setting it to ``1``
forces the pure-numpy kernels, which is what the benchmark compares against.
"""

import os

_FLAG = "CORRPOST_DISABLE_NUMBA"


def _flag_set():
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _flag_set()
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(func):
    """Compile ``func`` in nopython mode with an on-disk cache."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)
