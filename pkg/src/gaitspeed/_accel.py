"""Backend switch for the hot numeric kernels.

Every kernel in :mod:`gaitspeed.kernels` exists twice: a loop version compiled
with numba and a vectorised numpy version. ``GAITSPEED_DISABLE_NUMBA=1`` (or a
missing numba install) routes all calls to the numpy versions.
"""

import os

DISABLE_ENV = "GAITSPEED_DISABLE_NUMBA"

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None


def _disabled_by_env():
    return os.environ.get(DISABLE_ENV, "").strip().lower() in {"1", "true", "yes", "on"}


HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _disabled_by_env()


def njit(func):
    """Compile ``func`` in nopython mode when numba is importable.

    Compilation happens regardless of the env flag so benchmarks can always
    compare both paths; the flag only changes which path the dispatchers pick.
    """
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
