"""JIT switch.

Kernels are compiled with numba when it is importable and the environment
variable ``VOXFAIR_DISABLE_JIT`` is unset (or ``0``). Otherwise the pure
numpy implementations in :mod:`voxfair.kernels` are used.
"""

import os

_flag = os.environ.get("VOXFAIR_DISABLE_JIT", "0").strip().lower()
JIT_REQUESTED = _flag in ("", "0", "false", "no")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    numba = None
    HAS_NUMBA = False

USE_JIT = JIT_REQUESTED and HAS_NUMBA


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return numba.njit(*args, **kwargs)

    def wrap(fn):
        return fn

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return wrap
