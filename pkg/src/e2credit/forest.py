"""Random forest regression: bagged, depth-limited CARTs with per-node
random feature subsets.

Training is deterministic for a fixed master seed no matter how many worker
threads run: each tree owns an independent generator derived from
(master_seed, tree_index) through numpy's SeedSequence spawn keys, so
scheduling order cannot leak into the result. Trees store their split
records (feature, threshold, per-node SSE improvement, sample counts),
which the importance module consumes.
"""
from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import FeatureColumn, FeatureMatrix

LEAF = _kernels.LEAF

DEFAULT_N_TREES = 50
DEFAULT_FEATURES_PER_SPLIT = 15
DEFAULT_MAX_DEPTH = 15


@dataclass(frozen=True)
class SplitDecision:
    """Winning split of a greedy SSE search."""

    feature: int
    threshold: float
    sse_after: float
    left_mean: float
    right_mean: float


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    row_indices: np.ndarray,
    feature_subset: np.ndarray,
) -> SplitDecision | None:
    """Greedy SSE-minimizing split over the given rows and features.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values of each feature; the objective is the summed within-region SSE
    around the region means. Ties break toward the lower SSE, then lower
    feature index, then lower threshold. Returns None when no candidate
    feature has two distinct values.
    """
    rows = np.asarray(row_indices, dtype=np.int64)
    if rows.size == 0:
        raise ValueError("best_split requires a non-empty sample")
    feats = np.asarray(feature_subset, dtype=np.int64)
    if feats.size == 0:
        raise ValueError("best_split requires a non-empty feature subset")
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    f, s, sse_after = _kernels.scan_best_split(X, y, rows, feats)
    if f < 0:
        return None
    mask = X[rows, f] <= s
    left_rows = rows[mask]
    right_rows = rows[~mask]
    return SplitDecision(
        feature=int(f),
        threshold=float(s),
        sse_after=float(sse_after),
        left_mean=float(np.cumsum(y[left_rows])[-1] / left_rows.size),
        right_mean=float(np.cumsum(y[right_rows])[-1] / right_rows.size),
    )


@dataclass(frozen=True)
class RegressionTree:
    """Fitted CART stored as parallel node arrays (root at index 0).

    feature[i] is -1 for leaves; value[i] is the mean label of the node's
    training rows, improvement[i] the SSE decrease achieved by its split.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray
    improvement: np.ndarray
    max_depth: int | None = None

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=np.int64)
        out = 0
        for i in range(self.n_nodes):
            d = depths[i]
            out = max(out, int(d))
            if self.feature[i] != LEAF:
                depths[self.left[i]] = d + 1
                depths[self.right[i]] = d + 1
        return out

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = np.nonzero(self.feature[node] != LEAF)[0]
        while active.size:
            nd = node[active]
            go_left = X[active, self.feature[nd]] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
            active = active[self.feature[node[active]] != LEAF]
        out = self.value[node]
        return float(out[0]) if single else out


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    bootstrap_rows: np.ndarray,
    m: int,
    max_depth: int | None,
    rng: np.random.Generator,
) -> RegressionTree:
    """Grow one CART on the given sample rows.

    A fresh random subset of m features is drawn at every node; recursion
    stops at pure nodes, nodes with fewer than two rows, nodes with no valid
    split, or max_depth levels below the root (None = no depth cap). Leaves
    predict the mean label of their rows.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    p = X.shape[1]
    if not 1 <= m <= p:
        raise ValueError(f"m must be in [1, {p}], got {m}")
    arrays = _kernels.build_tree_arrays(X, y, bootstrap_rows, m, max_depth, rng)
    return RegressionTree(max_depth=max_depth, **arrays)


@dataclass(frozen=True)
class Forest:
    """Bagged ensemble; prediction is the arithmetic mean of tree outputs."""

    trees: tuple[RegressionTree, ...]
    bootstrap_indices: tuple[np.ndarray, ...]
    oob_indices: tuple[np.ndarray, ...]
    n_trees: int
    m: int
    max_depth: int | None
    master_seed: int
    n_train_rows: int
    columns: tuple[FeatureColumn, ...] | None = field(default=None)

    @property
    def n_features(self) -> int | None:
        return len(self.columns) if self.columns is not None else None

    def predict(self, X: np.ndarray) -> np.ndarray | float:
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        if single:
            X = X[None, :]
        if self.columns is not None and X.shape[1] != len(self.columns):
            raise ValueError(
                f"feature dimension mismatch: forest expects {len(self.columns)}, "
                f"got {X.shape[1]}"
            )
        acc = np.zeros(X.shape[0], dtype=np.float64)
        for tree in self.trees:
            acc += tree.predict(X)
        acc /= self.n_trees
        return float(acc[0]) if single else acc

    def column_names(self) -> tuple[str, ...] | None:
        if self.columns is None:
            return None
        return tuple(col.name for col in self.columns)


def predict(forest: Forest, x: np.ndarray) -> np.ndarray | float:
    """Forest prediction for a single feature vector or a matrix of rows."""
    return forest.predict(x)


def _tree_rng(master_seed: int, tree_index: int) -> np.random.Generator:
    # Counter-style derivation: child stream (master_seed, b) is independent
    # of every other tree and of how trees are scheduled onto workers.
    return np.random.default_rng(
        np.random.SeedSequence(master_seed, spawn_key=(tree_index,))
    )


def _draw_bootstrap(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n)


def _fit_one_tree(X, y, n, b, m, max_depth, master_seed):
    rng = _tree_rng(master_seed, b)
    boot = _draw_bootstrap(rng, n)
    tree = grow_tree(X, y, boot, m, max_depth, rng)
    oob = np.setdiff1d(np.arange(n, dtype=np.int64), boot)
    return tree, boot.astype(np.int64), oob


def fit_forest(
    train: FeatureMatrix,
    n_trees: int = DEFAULT_N_TREES,
    m: int = DEFAULT_FEATURES_PER_SPLIT,
    max_depth: int | None = DEFAULT_MAX_DEPTH,
    master_seed: int = 0,
    workers: int = 1,
) -> Forest:
    """Train a forest of n_trees bagged CARTs on the encoded matrix.

    Each tree draws a bootstrap sample of n rows with replacement and grows
    with per-node feature subsets of size m; rows never drawn are recorded
    as the tree's out-of-bag set. The result is identical for any worker
    count.
    """
    if train.n_rows == 0:
        raise ValueError("cannot fit a forest on an empty training set")
    if n_trees < 1:
        raise ValueError(f"n_trees must be >= 1, got {n_trees}")
    X = np.ascontiguousarray(train.X, dtype=np.float64)
    y = np.ascontiguousarray(train.y, dtype=np.float64)
    n = train.n_rows
    jobs = [(X, y, n, b, m, max_depth, master_seed) for b in range(n_trees)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda args: _fit_one_tree(*args), jobs))
    else:
        results = [_fit_one_tree(*args) for args in jobs]
    trees, boots, oobs = zip(*results)
    return Forest(
        trees=tuple(trees),
        bootstrap_indices=tuple(boots),
        oob_indices=tuple(oobs),
        n_trees=n_trees,
        m=m,
        max_depth=max_depth,
        master_seed=master_seed,
        n_train_rows=n,
        columns=train.columns,
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

_MAGIC = b"E2CFOR01"
_FORMAT_VERSION = 1

_TREE_FIELDS = (
    ("feature", "<i8"),
    ("threshold", "<f8"),
    ("left", "<i8"),
    ("right", "<i8"),
    ("value", "<f8"),
    ("n_samples", "<i8"),
    ("improvement", "<f8"),
)


def save_forest(forest: Forest, path) -> None:
    """Write the forest to a versioned binary container.

    Layout: 8-byte magic "E2CFOR01", a little-endian uint32 header length,
    a JSON header (sorted keys) describing hyperparameters, column metadata
    and an array table (name, dtype, shape, byte offset), then the raw
    little-endian array payload. The encoding is fully deterministic, so
    identical forests produce byte-identical files.
    """
    array_table = []
    payload = bytearray()

    def add(name: str, arr: np.ndarray, dtype: str) -> None:
        data = np.ascontiguousarray(arr, dtype=np.dtype(dtype)).tobytes()
        array_table.append(
            {"name": name, "dtype": dtype, "shape": list(arr.shape), "offset": len(payload)}
        )
        payload.extend(data)

    for t, tree in enumerate(forest.trees):
        for field_name, dtype in _TREE_FIELDS:
            add(f"tree{t}/{field_name}", getattr(tree, field_name), dtype)
        add(f"tree{t}/bootstrap", forest.bootstrap_indices[t], "<i8")
        add(f"tree{t}/oob", forest.oob_indices[t], "<i8")

    header = {
        "format_version": _FORMAT_VERSION,
        "n_trees": forest.n_trees,
        "m": forest.m,
        "max_depth": forest.max_depth,
        "master_seed": forest.master_seed,
        "n_train_rows": forest.n_train_rows,
        "columns": (
            None
            if forest.columns is None
            else [[c.name, c.kind] for c in forest.columns]
        ),
        "arrays": array_table,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.uint32(len(blob)).tobytes())
        fh.write(blob)
        fh.write(bytes(payload))


def load_forest(path) -> Forest:
    """Read a forest written by save_forest; round-trips bit-exactly."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"not a forest file (bad magic {magic!r}): {path}")
        (header_len,) = np.frombuffer(fh.read(4), dtype="<u4")
        header = json.loads(fh.read(int(header_len)).decode("utf-8"))
        if header["format_version"] != _FORMAT_VERSION:
            raise ValueError(
                f"unsupported forest format version {header['format_version']}"
            )
        payload = fh.read()
    arrays = {}
    for entry in header["arrays"]:
        dtype = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        start = entry["offset"]
        arr = np.frombuffer(payload, dtype=dtype, count=count, offset=start)
        arrays[entry["name"]] = arr.reshape(entry["shape"]).copy()
    trees = []
    boots = []
    oobs = []
    for t in range(header["n_trees"]):
        fields = {
            name: arrays[f"tree{t}/{name}"] for name, _ in _TREE_FIELDS
        }
        trees.append(RegressionTree(max_depth=header["max_depth"], **fields))
        boots.append(arrays[f"tree{t}/bootstrap"])
        oobs.append(arrays[f"tree{t}/oob"])
    columns = header["columns"]
    return Forest(
        trees=tuple(trees),
        bootstrap_indices=tuple(boots),
        oob_indices=tuple(oobs),
        n_trees=header["n_trees"],
        m=header["m"],
        max_depth=header["max_depth"],
        master_seed=header["master_seed"],
        n_train_rows=header["n_train_rows"],
        columns=(
            None
            if columns is None
            else tuple(FeatureColumn(name, kind) for name, kind in columns)
        ),
    )
