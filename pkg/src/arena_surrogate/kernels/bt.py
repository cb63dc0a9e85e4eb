from __future__ import annotations

import numpy as np

from .._backend import njit, pick


def _tally_loop(q_idx, a_idx, b_idx, score_a, query_weight, n_models):
    wins = np.zeros((n_models, n_models))
    for k in range(q_idx.shape[0]):
        w = query_weight[q_idx[k]]
        if w == 0:
            continue
        wins[a_idx[k], b_idx[k]] += w * score_a[k]
        wins[b_idx[k], a_idx[k]] += w * (1.0 - score_a[k])
    return wins


def tally_numpy(q_idx, a_idx, b_idx, score_a, query_weight, n_models: int) -> np.ndarray:
    """Weighted win matrix; ``wins[i, j]`` is the (fractional) wins of i over j.

    ``query_weight[q]`` is the multiplicity of query ``q`` in the sampled
    multiset, or a per-judgment weight when indexed by an identity ``q_idx``.
    """
    w = np.asarray(query_weight, dtype=np.float64)[q_idx]
    s = np.asarray(score_a, dtype=np.float64)
    flat = np.bincount(a_idx * n_models + b_idx, weights=w * s, minlength=n_models * n_models)
    flat += np.bincount(b_idx * n_models + a_idx, weights=w * (1.0 - s), minlength=n_models * n_models)
    return flat.reshape(n_models, n_models)


_tally_nb = njit(_tally_loop)


def tally_numba(q_idx, a_idx, b_idx, score_a, query_weight, n_models: int) -> np.ndarray:
    return _tally_nb(
        np.asarray(q_idx, dtype=np.int64),
        np.asarray(a_idx, dtype=np.int64),
        np.asarray(b_idx, dtype=np.int64),
        np.asarray(score_a, dtype=np.float64),
        np.asarray(query_weight, dtype=np.float64),
        n_models,
    )


def _mm_loop(wins, tol, max_iter):
    n = wins.shape[0]
    total_wins = np.zeros(n)
    for i in range(n):
        for j in range(n):
            total_wins[i] += wins[i, j]
    logp = np.zeros(n)
    p = np.ones(n)
    new = np.empty(n)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        for i in range(n):
            denom = 0.0
            for j in range(n):
                g = wins[i, j] + wins[j, i]
                if j != i and g > 0:
                    denom += g / (p[i] + p[j])
            new[i] = np.log(total_wins[i] / denom)
        new -= new.mean()
        delta = np.max(np.abs(new - logp))
        logp[:] = new
        p = np.exp(logp)
        if delta < tol:
            converged = True
            break
    return logp, it, converged


def bt_mm_numpy(wins: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int, bool]:
    """Minorize-maximize iteration for Bradley-Terry strengths.

    Returns mean-centred log-strengths, the iteration count and whether the
    max absolute logit change dropped below ``tol``. The caller guarantees
    that the win graph is strongly connected.
    """
    wins = np.asarray(wins, dtype=np.float64)
    games = wins + wins.T
    total_wins = wins.sum(axis=1)
    logp = np.zeros(wins.shape[0])
    p = np.ones(wins.shape[0])
    for it in range(1, max_iter + 1):
        denom = (games / (p[:, None] + p[None, :])).sum(axis=1)
        new = np.log(total_wins / denom)
        new -= new.mean()
        delta = np.max(np.abs(new - logp))
        logp = new
        p = np.exp(logp)
        if delta < tol:
            return logp, it, True
    return logp, max_iter, False


_mm_nb = njit(_mm_loop)


def bt_mm_numba(wins: np.ndarray, tol: float, max_iter: int) -> tuple[np.ndarray, int, bool]:
    logp, it, ok = _mm_nb(np.ascontiguousarray(wins, dtype=np.float64), float(tol), int(max_iter))
    return logp, int(it), bool(ok)


tally = pick(tally_numba if _tally_nb is not None else None, tally_numpy)
bt_mm = pick(bt_mm_numba if _mm_nb is not None else None, bt_mm_numpy)
