"""Feature-importance procedures for a fitted forest.

Two views of the same question:

* improvement-weighted split counting (MDI): per feature, accumulate
  (node sample count x SSE improvement) over every node split on it,
  average over trees, normalize to sum one;
* out-of-bag permutation importance: per tree b and feature A, compare the
  tree's R^2 on its OOB rows before and after permuting column A there,
  VI(A) = mean over trees of (R2_b - R2_b_permuted) / R2_b.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import FeatureMatrix
from .forest import Forest
from .metrics import r_squared_arrays


@dataclass(frozen=True)
class ImportanceReport:
    """Per-feature scores plus deterministic rankings (best first)."""

    feature_names: tuple[str, ...]
    mdi: np.ndarray | None = None
    permutation_vi: np.ndarray | None = None

    def _ranking(self, scores: np.ndarray) -> tuple[int, ...]:
        # Stable sort on negated scores: ties keep column order.
        return tuple(int(i) for i in np.argsort(-scores, kind="stable"))

    def mdi_ranking(self) -> tuple[int, ...]:
        if self.mdi is None:
            raise ValueError("report has no MDI scores")
        return self._ranking(self.mdi)

    def vi_ranking(self) -> tuple[int, ...]:
        if self.permutation_vi is None:
            raise ValueError("report has no permutation scores")
        return self._ranking(self.permutation_vi)

    def merged(self, other: "ImportanceReport") -> "ImportanceReport":
        if other.feature_names != self.feature_names:
            raise ValueError("cannot merge reports over different features")
        return ImportanceReport(
            feature_names=self.feature_names,
            mdi=self.mdi if self.mdi is not None else other.mdi,
            permutation_vi=(
                self.permutation_vi
                if self.permutation_vi is not None
                else other.permutation_vi
            ),
        )


def _feature_names(forest: Forest, train: FeatureMatrix) -> tuple[str, ...]:
    names = train.column_names()
    if forest.columns is not None and forest.column_names() != names:
        raise ValueError("forest and matrix disagree on feature columns")
    return names


def mdi_importance(forest: Forest, train: FeatureMatrix) -> ImportanceReport:
    """Improvement-weighted split counts, normalized to sum one.

    A feature never chosen by any split scores exactly zero.
    """
    names = _feature_names(forest, train)
    p = len(names)
    totals = np.zeros(p, dtype=np.float64)
    for tree in forest.trees:
        internal = tree.feature != -1
        feats = tree.feature[internal]
        weights = tree.n_samples[internal] * tree.improvement[internal]
        np.add.at(totals, feats, weights)
    totals /= forest.n_trees
    total = totals.sum()
    if total > 0.0:
        totals = totals / total
    return ImportanceReport(feature_names=names, mdi=totals)


def _permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    # Module-level so tests can substitute an identity permutation.
    return rng.permutation(n)


def permutation_importance(
    forest: Forest, train: FeatureMatrix, seed: int
) -> ImportanceReport:
    """Out-of-bag permutation importance VI per feature.

    Permutations are drawn per (tree, feature) from streams derived from
    (seed, tree index), so repeated calls agree bitwise and worker scheduling
    cannot matter. Trees whose OOB set is too small, has constant labels, or
    scores exactly zero R^2 are skipped with a warning; the average runs over
    the remaining trees. The stored matrix is never modified.
    """
    names = _feature_names(forest, train)
    p = len(names)
    acc = np.zeros(p, dtype=np.float64)
    used = 0
    for b, tree in enumerate(forest.trees):
        oob = forest.oob_indices[b]
        if oob.size < 2:
            warnings.warn(f"tree {b}: OOB set too small, skipped", stacklevel=2)
            continue
        y_oob = train.y[oob]
        if np.all(y_oob == y_oob[0]):
            warnings.warn(
                f"tree {b}: constant OOB labels, R^2 undefined, skipped",
                stacklevel=2,
            )
            continue
        X_oob = train.X[oob].copy()
        base_r2 = r_squared_arrays(y_oob, tree.predict(X_oob))
        if base_r2 == 0.0:
            warnings.warn(f"tree {b}: zero OOB R^2, skipped", stacklevel=2)
            continue
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))
        for a in range(p):
            perm = _permutation(rng, oob.size)
            saved = X_oob[:, a].copy()
            X_oob[:, a] = saved[perm]
            perm_r2 = r_squared_arrays(y_oob, tree.predict(X_oob))
            X_oob[:, a] = saved
            acc[a] += (base_r2 - perm_r2) / base_r2
        used += 1
    if used == 0:
        raise ValueError("no tree had a usable out-of-bag sample")
    return ImportanceReport(feature_names=names, permutation_vi=acc / used)


def importance_report(
    forest: Forest, train: FeatureMatrix, seed: int
) -> ImportanceReport:
    """Both importance measures in one report."""
    return mdi_importance(forest, train).merged(
        permutation_importance(forest, train, seed)
    )
