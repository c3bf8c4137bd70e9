"""Numba switch.

Hot kernels are written twice: an ``@njit`` loop version and a vectorised
numpy version. ``NUMBA_ENABLED`` picks which one the public wrappers call.
Set ``NFDX_DISABLE_NUMBA=1`` to force the numpy path; the numpy path is
also used when numba cannot be imported.
"""

import functools
import os

try:
    import numba as _nb
except ImportError:  # pragma: no cover - exercised only without numba
    _nb = None

HAVE_NUMBA = _nb is not None
NUMBA_ENABLED = HAVE_NUMBA and os.environ.get("NFDX_DISABLE_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
    "on",
)

if HAVE_NUMBA:
    njit = functools.partial(_nb.njit, cache=True, nogil=True)
else:  # pragma: no cover

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
