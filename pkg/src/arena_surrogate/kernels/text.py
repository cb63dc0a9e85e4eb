from __future__ import annotations

import numpy as np

from .._backend import njit, pick


def _lcs_loop(a, b):
    n = b.shape[0]
    prev = np.zeros(n + 1, dtype=np.int64)
    curr = np.zeros(n + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        ai = a[i]
        for j in range(1, n + 1):
            if ai == b[j - 1]:
                curr[j] = prev[j - 1] + 1
            elif prev[j] >= curr[j - 1]:
                curr[j] = prev[j]
            else:
                curr[j] = curr[j - 1]
        prev, curr = curr, prev
    return prev[n]


def lcs_length_numpy(a: np.ndarray, b: np.ndarray) -> int:
    """Row-vectorised LCS: a matched cell always dominates its neighbours,
    so each DP row is a running maximum."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return 0
    prev = np.zeros(b.size + 1, dtype=np.int64)
    for ai in a:
        cand = np.where(b == ai, prev[:-1] + 1, prev[1:])
        row = np.empty_like(prev)
        row[0] = 0
        np.maximum.accumulate(cand, out=row[1:])
        prev = row
    return int(prev[-1])


_lcs_nb = njit(_lcs_loop)


def lcs_length_numba(a: np.ndarray, b: np.ndarray) -> int:
    return int(_lcs_nb(np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)))


lcs_length = pick(lcs_length_numba if _lcs_nb is not None else None, lcs_length_numpy)
