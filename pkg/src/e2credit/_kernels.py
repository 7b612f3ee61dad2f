"""Tree-growing kernels: numba-compiled hot path with a pure-numpy fallback.

Backend selection happens once at import: numba is used when importable
unless E2CREDIT_DISABLE_NUMBA is set to 1/true/yes. The two implementations
are kept bit-identical on purpose:

* stable (mergesort) argsorts, whose output permutation is unique,
* sequential prefix sums (np.cumsum accumulates in order, matching the
  scalar loops),
* identical expression trees for the SSE of every candidate split,
* first-minimum tie-breaking (np.argmin vs strict-less scans),
* the same draws, in the same order, from the same numpy Generator
  (numba reproduces Generator streams exactly).

So a fixed seed grows the same forest on either backend; the benchmark in
benchmarks/ relies on that to compare runtimes on equal terms.
"""
from __future__ import annotations

import os

import numpy as np

LEAF = -1


def _env_disabled() -> bool:
    return os.environ.get("E2CREDIT_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
    }


try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised via env flag instead
    numba = None
    NUMBA_AVAILABLE = False

BACKEND = "numba" if (NUMBA_AVAILABLE and not _env_disabled()) else "numpy"


# ---------------------------------------------------------------------------
# Scalar implementation (compiled with numba when available)
# ---------------------------------------------------------------------------


# Two features inducing the same row partition have identical SSE in exact
# arithmetic but differ by summation-order noise in floats; a candidate must
# beat the incumbent by this fraction of the node SSE, otherwise the earlier
# (lower feature index, lower threshold) winner stands, matching the exact
# tie-break.
TIE_TOL = 1e-10


def _scan_segment_loops(X, y, rows, s0, e0, feats):
    # Best split over the given features for rows[s0:e0]: candidates are
    # midpoints between consecutive distinct sorted values; ties resolve to
    # the lowest SSE, then lowest feature index (feats is sorted), then
    # lowest threshold (first minimum while scanning ascending).
    n = e0 - s0
    best_sse = np.inf
    best_f = -1
    best_s = 0.0
    vals = np.empty(n, dtype=np.float64)
    p1 = np.empty(n, dtype=np.float64)
    p2 = np.empty(n, dtype=np.float64)
    vs = np.empty(n, dtype=np.float64)
    for fi in range(feats.shape[0]):
        f = feats[fi]
        for i in range(n):
            vals[i] = X[rows[s0 + i], f]
        order = np.argsort(vals, kind="mergesort")
        c1 = 0.0
        c2 = 0.0
        for i in range(n):
            yi = y[rows[s0 + order[i]]]
            c1 += yi
            c2 += yi * yi
            p1[i] = c1
            p2[i] = c2
            vs[i] = vals[order[i]]
        t1 = p1[n - 1]
        t2 = p2[n - 1]
        loc_sse = np.inf
        loc_k = -1
        for k in range(n - 1):
            if vs[k] < vs[k + 1]:
                nl = k + 1.0
                nr = n - k - 1.0
                sl = p1[k]
                sr = t1 - sl
                sse = (p2[k] - sl * sl / nl) + ((t2 - p2[k]) - sr * sr / nr)
                if sse < loc_sse:
                    loc_sse = sse
                    loc_k = k
        if loc_k >= 0:
            scale = t2 - t1 * t1 / n
            if loc_sse < best_sse - TIE_TOL * scale:
                best_sse = loc_sse
                best_f = f
                best_s = (vs[loc_k] + vs[loc_k + 1]) / 2.0
    return best_f, best_s, best_sse


def _draw_feature_subset_loops(rng, p, m, pool):
    # Partial Fisher-Yates; consumes exactly m uniform draws.
    for j in range(p):
        pool[j] = j
    for i in range(m):
        span = p - i
        u = rng.random()
        k = int(u * span)
        if k >= span:
            k = span - 1
        k += i
        tmp = pool[i]
        pool[i] = pool[k]
        pool[k] = tmp
    return np.sort(pool[:m].copy())


if NUMBA_AVAILABLE:
    _njit = numba.njit(cache=True, nogil=True)
    _scan_segment_numba = _njit(_scan_segment_loops)
    _draw_feature_subset_numba = _njit(_draw_feature_subset_loops)

    @numba.njit(cache=True, nogil=True)
    def _build_tree_numba(
        X, y, rows, m_features, max_depth, rng,
        feature, threshold, left, right, value, n_samples, improvement,
    ):
        n_total = rows.shape[0]
        p = X.shape[1]
        m = m_features if m_features < p else p
        tmp = np.empty(n_total, dtype=np.int64)
        pool = np.empty(p, dtype=np.int64)
        cap = feature.shape[0]
        st_node = np.empty(cap, dtype=np.int64)
        st_start = np.empty(cap, dtype=np.int64)
        st_end = np.empty(cap, dtype=np.int64)
        st_depth = np.empty(cap, dtype=np.int64)
        st_node[0] = 0
        st_start[0] = 0
        st_end[0] = n_total
        st_depth[0] = 0
        top = 1
        next_id = 1
        while top > 0:
            top -= 1
            node = st_node[top]
            s0 = st_start[top]
            e0 = st_end[top]
            depth = st_depth[top]
            n = e0 - s0
            a1 = 0.0
            a2 = 0.0
            for i in range(s0, e0):
                yi = y[rows[i]]
                a1 += yi
                a2 += yi * yi
            value[node] = a1 / n
            n_samples[node] = n
            feature[node] = LEAF
            threshold[node] = 0.0
            left[node] = LEAF
            right[node] = LEAF
            improvement[node] = 0.0
            if n < 2 or depth >= max_depth:
                continue
            y0 = y[rows[s0]]
            pure = True
            for i in range(s0 + 1, e0):
                if y[rows[i]] != y0:
                    pure = False
                    break
            if pure:
                continue
            feats = _draw_feature_subset_numba(rng, p, m, pool)
            best_f, best_s, best_sse = _scan_segment_numba(X, y, rows, s0, e0, feats)
            if best_f < 0:
                continue
            node_sse = a2 - a1 * a1 / n
            gain = node_sse - best_sse
            if gain < 0.0:
                gain = 0.0
            nl = 0
            for i in range(s0, e0):
                if X[rows[i], best_f] <= best_s:
                    tmp[nl] = rows[i]
                    nl += 1
            nr = nl
            for i in range(s0, e0):
                if X[rows[i], best_f] > best_s:
                    tmp[nr] = rows[i]
                    nr += 1
            for i in range(n):
                rows[s0 + i] = tmp[i]
            feature[node] = best_f
            threshold[node] = best_s
            improvement[node] = gain
            left_id = next_id
            right_id = next_id + 1
            next_id += 2
            left[node] = left_id
            right[node] = right_id
            st_node[top] = right_id
            st_start[top] = s0 + nl
            st_end[top] = e0
            st_depth[top] = depth + 1
            top += 1
            st_node[top] = left_id
            st_start[top] = s0
            st_end[top] = s0 + nl
            st_depth[top] = depth + 1
            top += 1
        return next_id

else:  # pragma: no cover
    _scan_segment_numba = None
    _draw_feature_subset_numba = None
    _build_tree_numba = None


# ---------------------------------------------------------------------------
# Vectorized numpy fallback
# ---------------------------------------------------------------------------


def _scan_segment_numpy(X, y, rows, s0, e0, feats):
    n = e0 - s0
    if n < 2:
        return -1, 0.0, np.inf
    seg = rows[s0:e0]
    y_node = y[seg]
    Xsub = X[np.ix_(seg, feats)]
    order = np.argsort(Xsub, axis=0, kind="mergesort")
    vs = np.take_along_axis(Xsub, order, axis=0)
    yo = y_node[order]
    p1 = np.cumsum(yo, axis=0)
    p2 = np.cumsum(yo * yo, axis=0)
    t1 = p1[-1, :]
    t2 = p2[-1, :]
    nl = np.arange(1, n, dtype=np.float64)[:, None]
    nr = n - nl
    sl = p1[:-1, :]
    sr = t1[None, :] - sl
    sse = (p2[:-1, :] - sl * sl / nl) + ((t2[None, :] - p2[:-1, :]) - sr * sr / nr)
    valid = vs[:-1, :] < vs[1:, :]
    sse = np.where(valid, sse, np.inf)
    col_k = np.argmin(sse, axis=0)
    col_best = sse[col_k, np.arange(feats.shape[0])]
    scales = t2 - t1 * t1 / n
    best_sse = np.inf
    best_f = -1
    best_s = 0.0
    for fi in range(feats.shape[0]):
        if col_best[fi] < best_sse - TIE_TOL * scales[fi]:
            best_sse = float(col_best[fi])
            k = int(col_k[fi])
            best_f = int(feats[fi])
            best_s = (vs[k, fi] + vs[k + 1, fi]) / 2.0
    return best_f, best_s, best_sse


def _build_tree_numpy(
    X,
    y,
    rows,
    m_features,
    max_depth,
    rng,
    feature,
    threshold,
    left,
    right,
    value,
    n_samples,
    improvement,
):
    n_total = rows.shape[0]
    p = X.shape[1]
    m = m_features if m_features < p else p
    pool = np.empty(p, dtype=np.int64)
    stack = [(0, 0, n_total, 0)]
    next_id = 1
    while stack:
        node, s0, e0, depth = stack.pop()
        seg = rows[s0:e0]
        y_node = y[seg]
        n = e0 - s0
        c1 = np.cumsum(y_node)
        a1 = float(c1[-1])
        a2 = float(np.cumsum(y_node * y_node)[-1])
        value[node] = a1 / n
        n_samples[node] = n
        feature[node] = LEAF
        threshold[node] = 0.0
        left[node] = LEAF
        right[node] = LEAF
        improvement[node] = 0.0
        if n < 2 or depth >= max_depth:
            continue
        if np.all(y_node == y_node[0]):
            continue
        feats = _draw_feature_subset_loops(rng, p, m, pool)
        best_f, best_s, best_sse = _scan_segment_numpy(X, y, rows, s0, e0, feats)
        if best_f < 0:
            continue
        node_sse = a2 - a1 * a1 / n
        gain = max(node_sse - best_sse, 0.0)
        mask = X[seg, best_f] <= best_s
        left_part = seg[mask]
        right_part = seg[~mask]
        nl = left_part.shape[0]
        rows[s0 : s0 + nl] = left_part
        rows[s0 + nl : e0] = right_part
        feature[node] = best_f
        threshold[node] = best_s
        improvement[node] = gain
        left_id = next_id
        right_id = next_id + 1
        next_id += 2
        left[node] = left_id
        right[node] = right_id
        stack.append((right_id, s0 + nl, e0, depth + 1))
        stack.append((left_id, s0, s0 + nl, depth + 1))
    return next_id


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------

_UNBOUNDED_DEPTH = 2**31


def _resolve(backend: str | None) -> str:
    backend = BACKEND if backend is None else backend
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend: {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not importable")
    return backend


def _node_capacity(n_rows: int, max_depth: int) -> int:
    cap = 2 * n_rows - 1
    if max_depth < 60:
        cap = min(cap, 2 ** (max_depth + 1) - 1)
    return max(cap, 1)


def build_tree_arrays(X, y, bootstrap_rows, m, max_depth, rng, backend=None):
    """Grow one regression tree; returns (node array dict, node count).

    bootstrap_rows is not modified (the builder partitions a copy in place).
    max_depth=None grows until nodes are pure or too small to split.
    """
    backend = _resolve(backend)
    rows = np.ascontiguousarray(bootstrap_rows, dtype=np.int64).copy()
    n = rows.shape[0]
    if n == 0:
        raise ValueError("cannot grow a tree on an empty sample")
    depth = _UNBOUNDED_DEPTH if max_depth is None else int(max_depth)
    if depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    cap = _node_capacity(n, depth)
    feature = np.empty(cap, dtype=np.int64)
    threshold = np.empty(cap, dtype=np.float64)
    left = np.empty(cap, dtype=np.int64)
    right = np.empty(cap, dtype=np.int64)
    value = np.empty(cap, dtype=np.float64)
    n_samples = np.empty(cap, dtype=np.int64)
    improvement = np.empty(cap, dtype=np.float64)
    builder = _build_tree_numba if backend == "numba" else _build_tree_numpy
    count = builder(
        X, y, rows, int(m), depth, rng,
        feature, threshold, left, right, value, n_samples, improvement,
    )
    count = int(count)
    return {
        "feature": feature[:count].copy(),
        "threshold": threshold[:count].copy(),
        "left": left[:count].copy(),
        "right": right[:count].copy(),
        "value": value[:count].copy(),
        "n_samples": n_samples[:count].copy(),
        "improvement": improvement[:count].copy(),
    }


def scan_best_split(X, y, row_indices, feats, backend=None):
    """Best (feature, threshold, sse_after) over explicit features and rows;
    feature index is -1 when no feature has two distinct values."""
    backend = _resolve(backend)
    rows = np.ascontiguousarray(row_indices, dtype=np.int64)
    feats = np.sort(np.ascontiguousarray(feats, dtype=np.int64))
    scan = _scan_segment_numba if backend == "numba" else _scan_segment_numpy
    return scan(X, y, rows, 0, rows.shape[0], feats)
