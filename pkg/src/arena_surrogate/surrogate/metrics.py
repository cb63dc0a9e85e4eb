from __future__ import annotations

import math
from collections.abc import Mapping, Sequence

import numpy as np

from .. import kernels


def _aligned(a, b) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(a, Mapping) or isinstance(b, Mapping):
        if not (isinstance(a, Mapping) and isinstance(b, Mapping)):
            raise TypeError("pass two mappings or two sequences")
        if set(a) != set(b):
            raise ValueError(f"item sets differ: {sorted(set(a) ^ set(b))[:5]}")
        keys = sorted(a)
        return np.array([a[k] for k in keys], dtype=float), np.array([b[k] for k in keys], dtype=float)
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("rankings must be 1-D and of equal length")
    return x, y


def kendall_tau(a: Mapping[str, float] | Sequence[float], b: Mapping[str, float] | Sequence[float]) -> float:
    """Kendall tau-b between two rankings (or score vectors) over the same items.

    Accepts either two mappings item -> rank/score or two aligned sequences.
    Returns NaN when one side is entirely tied.
    """
    x, y = _aligned(a, b)
    c, d, tx, ty = kernels.kendall_counts(x, y)
    denom = math.sqrt((c + d + tx) * (c + d + ty))
    return (c - d) / denom if denom else float("nan")


def r_squared(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    yt = np.asarray(y_true, dtype=float)
    yp = np.asarray(y_pred, dtype=float)
    if yt.shape != yp.shape:
        raise ValueError("length mismatch")
    if yt.size < 2:
        raise ValueError("need at least two points")
    ss_tot = float(((yt - yt.mean()) ** 2).sum())
    if ss_tot == 0:
        raise ValueError("y_true is constant; R^2 undefined")
    return 1.0 - float(((yt - yp) ** 2).sum()) / ss_tot
