"""CART regression-tree construction on pre-drawn randomness.

Both backends consume the same inputs (bootstrap rows already gathered, one
row of uniform keys per potential node for feature subsampling), visit nodes
in the same order and use the same summation order, so they grow identical
trees.
"""
from __future__ import annotations

import numpy as np

from .._backend import HAVE_NUMBA, njit, pick


def _split_loop(X, y, idx, feats, min_leaf):
    m = idx.shape[0]
    best_sse = np.inf
    best_f = -1
    best_thr = 0.0
    xs = np.empty(m)
    ys = np.empty(m)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for k in range(m):
            xs[k] = X[idx[k], f]
        o = np.argsort(xs, kind="mergesort")
        xs_s = xs[o]
        for k in range(m):
            ys[k] = y[idx[o[k]]]
        tot_s = 0.0
        tot_q = 0.0
        for k in range(m):
            tot_s += ys[k]
            tot_q += ys[k] * ys[k]
        sl = 0.0
        ql = 0.0
        f_sse = np.inf
        f_k = -1
        for k in range(m - 1):
            sl += ys[k]
            ql += ys[k] * ys[k]
            nl = k + 1
            nr = m - nl
            if xs_s[k] < xs_s[k + 1] and nl >= min_leaf and nr >= min_leaf:
                sr = tot_s - sl
                qr = tot_q - ql
                sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
                if sse < f_sse:
                    f_sse = sse
                    f_k = k
        if f_k >= 0 and f_sse < best_sse:
            best_sse = f_sse
            best_f = f
            thr = (xs_s[f_k] + xs_s[f_k + 1]) * 0.5
            if thr >= xs_s[f_k + 1]:
                thr = xs_s[f_k]
            best_thr = thr
    return best_f, best_thr, best_sse


def _split_vec(X, y, idx, feats, min_leaf):
    m = idx.shape[0]
    nl = np.arange(1, m)
    nr = m - nl
    best_sse = np.inf
    best_f = -1
    best_thr = 0.0
    for f in feats:
        xs = X[idx, f]
        o = np.argsort(xs, kind="mergesort")
        xs_s = xs[o]
        ys_s = y[idx[o]]
        cs = np.cumsum(ys_s)
        cq = np.cumsum(ys_s * ys_s)
        sl = cs[:-1]
        ql = cq[:-1]
        sr = cs[-1] - sl
        qr = cq[-1] - ql
        valid = (xs_s[:-1] < xs_s[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
        if not valid.any():
            continue
        sse = np.where(valid, (ql - sl * sl / nl) + (qr - sr * sr / nr), np.inf)
        k = int(np.argmin(sse))
        if sse[k] < best_sse:
            best_sse = sse[k]
            best_f = int(f)
            thr = (xs_s[k] + xs_s[k + 1]) * 0.5
            if thr >= xs_s[k + 1]:
                thr = xs_s[k]
            best_thr = thr
    return best_f, best_thr, best_sse


def _partition_loop(X, order, start, end, f, thr):
    buf = np.empty(end - start, dtype=order.dtype)
    n_left = 0
    for k in range(start, end):
        if X[order[k], f] <= thr:
            buf[n_left] = order[k]
            n_left += 1
    pos = n_left
    for k in range(start, end):
        if not X[order[k], f] <= thr:
            buf[pos] = order[k]
            pos += 1
    for k in range(end - start):
        order[start + k] = buf[k]
    return n_left


def _partition_vec(X, order, start, end, f, thr):
    seg = order[start:end].copy()
    mask = X[seg, f] <= thr
    order[start:end] = np.concatenate((seg[mask], seg[~mask]))
    return int(mask.sum())


def _seqsum_loop(a):
    s = 0.0
    for k in range(a.shape[0]):
        s += a[k]
    return s


def _seqsum_vec(a):
    return np.cumsum(a)[-1]


def _make_builder(split_fn, partition_fn, seqsum_fn):
    def build(X, y, keys, max_depth, min_leaf, m_try):
        n = X.shape[0]
        cap = 2 * n - 1
        feature = np.full(cap, -1, dtype=np.int64)
        threshold = np.zeros(cap)
        left = np.full(cap, -1, dtype=np.int64)
        right = np.full(cap, -1, dtype=np.int64)
        value = np.zeros(cap)
        gain = np.zeros(cap)
        count_at = np.zeros(cap, dtype=np.int64)
        order = np.arange(n)
        st_node = np.empty(cap, dtype=np.int64)
        st_start = np.empty(cap, dtype=np.int64)
        st_end = np.empty(cap, dtype=np.int64)
        st_depth = np.empty(cap, dtype=np.int64)
        st_node[0] = 0
        st_start[0] = 0
        st_end[0] = n
        st_depth[0] = 0
        top = 1
        count = 1
        while top > 0:
            top -= 1
            node = st_node[top]
            start = st_start[top]
            end = st_end[top]
            depth = st_depth[top]
            idx = order[start:end].copy()
            ys = y[idx]
            m = end - start
            s = seqsum_fn(ys)
            value[node] = s / m
            count_at[node] = m
            if (max_depth >= 0 and depth >= max_depth) or m < 2 * min_leaf:
                continue
            if ys.max() == ys.min():
                continue
            feats = np.argsort(keys[node], kind="mergesort")[:m_try]
            f, thr, child_sse = split_fn(X, y, idx, feats, min_leaf)
            if f < 0:
                continue
            q = seqsum_fn(ys * ys)
            g = (q - s * s / m) - child_sse
            if not g > 0:
                continue
            n_left = partition_fn(X, order, start, end, f, thr)
            feature[node] = f
            threshold[node] = thr
            gain[node] = g
            lid = count
            rid = count + 1
            count += 2
            left[node] = lid
            right[node] = rid
            st_node[top] = rid
            st_start[top] = start + n_left
            st_end[top] = end
            st_depth[top] = depth + 1
            top += 1
            st_node[top] = lid
            st_start[top] = start
            st_end[top] = start + n_left
            st_depth[top] = depth + 1
            top += 1
        return (feature[:count], threshold[:count], left[:count], right[:count],
                value[:count], gain[:count], count_at[:count])

    return build


_build_np = _make_builder(_split_vec, _partition_vec, _seqsum_vec)

if HAVE_NUMBA:
    _build_nb = njit(_make_builder(njit(_split_loop), njit(_partition_loop), njit(_seqsum_loop)))
else:  # pragma: no cover
    _build_nb = None


def _prepare(X, y, keys, max_depth, min_leaf, m_try):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    keys = np.ascontiguousarray(keys, dtype=np.float64)
    if X.ndim != 2 or y.shape != (X.shape[0],) or X.shape[0] == 0:
        raise ValueError("X must be (n, p) with n >= 1 and y of length n")
    if keys.shape != (2 * X.shape[0] - 1, X.shape[1]):
        raise ValueError("keys must have shape (2n - 1, p)")
    if not 1 <= m_try <= X.shape[1]:
        raise ValueError("m_try must lie in [1, p]")
    md = -1 if max_depth is None else int(max_depth)
    return X, y, keys, md, int(min_leaf), int(m_try)


def build_tree_numpy(X, y, keys, max_depth, min_leaf, m_try):
    """Grow one tree; returns (feature, threshold, left, right, value, gain, n_samples).

    ``feature == -1`` marks a leaf. ``gain`` is the weighted SSE reduction of
    the split at that node. ``max_depth=None`` grows until purity/min_leaf.
    """
    return _build_np(*_prepare(X, y, keys, max_depth, min_leaf, m_try))


def build_tree_numba(X, y, keys, max_depth, min_leaf, m_try):
    return _build_nb(*_prepare(X, y, keys, max_depth, min_leaf, m_try))


build_tree = pick(build_tree_numba if _build_nb is not None else None, build_tree_numpy)
