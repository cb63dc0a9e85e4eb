from __future__ import annotations

import numpy as np

from .._backend import njit, pick


def _counts_loop(x, y):
    n = x.shape[0]
    conc = 0
    disc = 0
    tx = 0
    ty = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = x[i] - x[j]
            dy = y[i] - y[j]
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif (dx > 0) == (dy > 0):
                conc += 1
            else:
                disc += 1
    return conc, disc, tx, ty


def kendall_counts_numpy(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    """Return (concordant, discordant, ties only in x, ties only in y)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    iu = np.triu_indices(x.size, k=1)
    sx = np.sign(x[:, None] - x[None, :])[iu]
    sy = np.sign(y[:, None] - y[None, :])[iu]
    prod = sx * sy
    return (
        int(np.count_nonzero(prod > 0)),
        int(np.count_nonzero(prod < 0)),
        int(np.count_nonzero((sx == 0) & (sy != 0))),
        int(np.count_nonzero((sy == 0) & (sx != 0))),
    )


_counts_nb = njit(_counts_loop)


def kendall_counts_numba(x: np.ndarray, y: np.ndarray) -> tuple[int, int, int, int]:
    c, d, tx, ty = _counts_nb(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))
    return int(c), int(d), int(tx), int(ty)


kendall_counts = pick(kendall_counts_numba if _counts_nb is not None else None, kendall_counts_numpy)
