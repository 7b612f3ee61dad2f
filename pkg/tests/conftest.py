import numpy as np
import pytest

from e2credit.dataset import FeatureMatrix


def brute_force_best_split(X, y, rows, feats, tie_tol=1e-10):
    """Exhaustive reference split search, independent of the kernel path.

    Evaluates every midpoint between consecutive distinct sorted values of
    every candidate feature by direct summation around region means; ties
    break to (lower SSE, lower feature, lower threshold). A later feature
    must beat the incumbent by tie_tol times the node SSE: two features
    inducing the same partition are an exact tie in exact arithmetic, and
    the earlier feature must win regardless of float summation order.
    """
    y_node = y[rows]
    node_sse = float(np.sum((y_node - y_node.mean()) ** 2))
    best = None
    for f in sorted(int(f) for f in feats):
        vals = X[rows, f]
        distinct = np.unique(vals)
        local = None
        for lo, hi in zip(distinct[:-1], distinct[1:]):
            s = (lo + hi) / 2.0
            mask = vals <= s
            y_left = y[rows[mask]]
            y_right = y[rows[~mask]]
            sse = float(np.sum((y_left - y_left.mean()) ** 2)) + float(
                np.sum((y_right - y_right.mean()) ** 2)
            )
            if local is None or sse < local[1]:
                local = (s, sse)
        if local is None:
            continue
        if best is None or local[1] < best[2] - tie_tol * node_sse:
            best = (f, local[0], local[1])
    return best


@pytest.fixture
def brute_best_split():
    return brute_force_best_split


@pytest.fixture
def small_matrix():
    rng = np.random.default_rng(1234)
    X = rng.normal(size=(120, 5))
    y = 2.0 * X[:, 0] + rng.normal(scale=0.3, size=120)
    return FeatureMatrix.from_arrays(X, y)
