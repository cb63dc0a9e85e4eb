"""Selects between the numba-compiled kernels and their pure-numpy twins.

Set ``ARENA_SURROGATE_NUMBA=0`` to force the numpy path. The choice is made
once at import time; both implementations stay importable for testing and
benchmarking.
"""
from __future__ import annotations

import os

ENV_FLAG = "ARENA_SURROGATE_NUMBA"

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAVE_NUMBA = False


def _requested() -> bool:
    return os.environ.get(ENV_FLAG, "1").strip().lower() not in {"0", "false", "no", "off"}


USE_NUMBA = HAVE_NUMBA and _requested()


def njit(fn):
    """Compile ``fn`` with numba when available, else return ``None``."""
    if not HAVE_NUMBA:
        return None
    return numba.njit(cache=True, nogil=True)(fn)


def pick(compiled, fallback):
    return compiled if (USE_NUMBA and compiled is not None) else fallback


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
