import math

import numpy as np
import pytest

import e2credit.forest as forest_mod
from e2credit import _kernels
from e2credit.dataset import FeatureMatrix
from e2credit.forest import (
    Forest,
    best_split,
    fit_forest,
    grow_tree,
    load_forest,
    predict,
    save_forest,
)

FOUR_X = np.array([[1.0], [2.0], [3.0], [4.0]])
FOUR_Y = np.array([1.0, 1.0, 5.0, 5.0])


class TestBestSplit:
    def test_four_point_example(self):
        decision = best_split(FOUR_X, FOUR_Y, np.arange(4), np.array([0]))
        assert decision.feature == 0
        assert decision.threshold == 2.5
        assert decision.sse_after == 0.0
        assert decision.left_mean == 1.0
        assert decision.right_mean == 5.0

    def test_constant_target_tie_break(self):
        decision = best_split(FOUR_X, np.ones(4), np.arange(4), np.array([0]))
        assert decision.threshold == 1.5

    def test_informative_feature_beats_noise(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.repeat([0.0, 1.0], 10), rng.normal(size=20)])
        y = np.repeat([0.0, 10.0], 10)
        decision = best_split(X, y, np.arange(20), np.array([0, 1]))
        assert decision.feature == 0

    def test_no_valid_split(self):
        X = np.ones((5, 2))
        y = np.arange(5.0)
        assert best_split(X, y, np.arange(5), np.array([0, 1])) is None

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            best_split(FOUR_X, FOUR_Y, np.array([], dtype=np.int64), np.array([0]))
        with pytest.raises(ValueError):
            best_split(FOUR_X, FOUR_Y, np.arange(4), np.array([], dtype=np.int64))

    def test_matches_brute_force(self, brute_best_split):
        rng = np.random.default_rng(123)
        for _ in range(60):
            n = int(rng.integers(2, 31))
            p = int(rng.integers(1, 5))
            if rng.random() < 0.5:
                X = rng.normal(size=(n, p))
            else:
                X = rng.integers(0, 4, size=(n, p)).astype(np.float64)
            y = rng.normal(size=n)
            rows = np.arange(n)
            feats = np.arange(p)
            expected = brute_best_split(X, y, rows, feats)
            got = best_split(X, y, rows, feats)
            if expected is None:
                assert got is None
                continue
            assert got.feature == expected[0]
            assert got.threshold == expected[1]
            assert got.sse_after == pytest.approx(expected[2], rel=1e-9, abs=1e-9)


class TestGrowTree:
    def test_depth_one_matches_split(self):
        rng = np.random.default_rng(0)
        tree = grow_tree(FOUR_X, FOUR_Y, np.arange(4), m=1, max_depth=1, rng=rng)
        assert tree.n_nodes == 3
        assert tree.threshold[0] == 2.5
        assert sorted(tree.value[1:]) == [1.0, 5.0]
        assert tree.predict(np.array([1.5])) == 1.0

    def test_memorizes_distinct_rows(self):
        rng_data = np.random.default_rng(5)
        X = rng_data.normal(size=(50, 3))
        y = rng_data.normal(size=50)
        tree = grow_tree(X, y, np.arange(50), m=3, max_depth=None,
                         rng=np.random.default_rng(1))
        assert np.abs(tree.predict(X) - y).max() == 0.0

    def test_single_row(self):
        tree = grow_tree(FOUR_X, FOUR_Y, np.array([2]), m=1, max_depth=5,
                         rng=np.random.default_rng(0))
        assert tree.n_nodes == 1
        assert tree.value[0] == 5.0

    def test_depth_cap_respected(self):
        rng_data = np.random.default_rng(9)
        X = rng_data.normal(size=(300, 4))
        y = rng_data.normal(size=300)
        for cap in (1, 2, 4, 7):
            tree = grow_tree(X, y, np.arange(300), m=4, max_depth=cap,
                             rng=np.random.default_rng(0))
            assert tree.depth() <= cap

    def test_improvements_nonnegative(self):
        rng_data = np.random.default_rng(10)
        X = rng_data.normal(size=(200, 3))
        y = rng_data.normal(size=200)
        tree = grow_tree(X, y, np.arange(200), m=2, max_depth=8,
                         rng=np.random.default_rng(2))
        assert (tree.improvement >= 0.0).all()
        assert np.isfinite(tree.value).all()

    def test_leaf_values_are_row_means(self):
        rng_data = np.random.default_rng(11)
        X = rng_data.normal(size=(150, 3))
        y = rng_data.normal(size=150)
        rows = np.random.default_rng(12).integers(0, 150, size=150)
        tree = grow_tree(X, y, rows, m=2, max_depth=4, rng=np.random.default_rng(3))
        # Route every training row to its leaf and compare means.
        leaves: dict[int, list[float]] = {}
        for r in rows:
            node = 0
            while tree.feature[node] != -1:
                if X[r, tree.feature[node]] <= tree.threshold[node]:
                    node = tree.left[node]
                else:
                    node = tree.right[node]
            leaves.setdefault(node, []).append(y[r])
        for node, values in leaves.items():
            assert tree.value[node] == pytest.approx(np.mean(values), rel=1e-9)

    def test_m_validation(self):
        with pytest.raises(ValueError):
            grow_tree(FOUR_X, FOUR_Y, np.arange(4), m=0, max_depth=3,
                      rng=np.random.default_rng(0))
        with pytest.raises(ValueError):
            grow_tree(FOUR_X, FOUR_Y, np.arange(4), m=2, max_depth=3,
                      rng=np.random.default_rng(0))


class TestFitForest:
    def test_defaults(self, small_matrix):
        forest = fit_forest(small_matrix, n_trees=5, m=3, max_depth=4, master_seed=0)
        assert forest.n_trees == 5
        assert len(forest.trees) == 5
        assert forest.n_train_rows == small_matrix.n_rows
        for boot, oob in zip(forest.bootstrap_indices, forest.oob_indices):
            assert boot.shape[0] == small_matrix.n_rows
            assert np.intersect1d(boot, oob).size == 0

    def test_default_hyperparameters(self):
        assert forest_mod.DEFAULT_N_TREES == 50
        assert forest_mod.DEFAULT_FEATURES_PER_SPLIT == 15
        assert forest_mod.DEFAULT_MAX_DEPTH == 15

    def test_m_guidance_covers_default(self):
        # For p=27 features the usual guidance 2-3x int(log2(p) + 1)
        # spans 10..15, which contains the default of 15.
        p = 27
        base = int(math.log2(p) + 1)
        assert 2 * base <= 15 <= 3 * base

    def test_identity_bootstrap_equals_single_cart(self, small_matrix, monkeypatch):
        monkeypatch.setattr(
            forest_mod, "_draw_bootstrap", lambda rng, n: np.arange(n, dtype=np.int64)
        )
        forest = fit_forest(small_matrix, n_trees=1, m=small_matrix.n_features,
                            max_depth=6, master_seed=7)
        rng = forest_mod._tree_rng(7, 0)
        _ = forest_mod._draw_bootstrap(rng, small_matrix.n_rows)
        cart = grow_tree(small_matrix.X, small_matrix.y,
                         np.arange(small_matrix.n_rows),
                         m=small_matrix.n_features, max_depth=6, rng=rng)
        assert np.array_equal(forest.predict(small_matrix.X), cart.predict(small_matrix.X))

    def test_prediction_is_mean_of_trees(self, small_matrix):
        forest = fit_forest(small_matrix, n_trees=7, m=2, max_depth=5, master_seed=3)
        stacked = np.stack([t.predict(small_matrix.X) for t in forest.trees])
        assert np.allclose(forest.predict(small_matrix.X), stacked.mean(axis=0),
                           rtol=1e-12, atol=1e-12)

    def test_two_tree_mean(self):
        t100 = forest_mod.RegressionTree(
            feature=np.array([-1]), threshold=np.array([0.0]),
            left=np.array([-1]), right=np.array([-1]), value=np.array([100.0]),
            n_samples=np.array([1]), improvement=np.array([0.0]))
        t200 = forest_mod.RegressionTree(
            feature=np.array([-1]), threshold=np.array([0.0]),
            left=np.array([-1]), right=np.array([-1]), value=np.array([200.0]),
            n_samples=np.array([1]), improvement=np.array([0.0]))
        pair = Forest(trees=(t100, t200), bootstrap_indices=(np.array([0]),) * 2,
                      oob_indices=(np.array([], dtype=np.int64),) * 2, n_trees=2,
                      m=1, max_depth=1, master_seed=0, n_train_rows=1)
        assert predict(pair, np.zeros(4)) == 150.0

    def test_dimension_mismatch(self, small_matrix):
        forest = fit_forest(small_matrix, n_trees=2, m=2, max_depth=3, master_seed=0)
        with pytest.raises(ValueError, match="dimension"):
            forest.predict(np.zeros((3, small_matrix.n_features + 1)))

    def test_determinism_across_workers(self, small_matrix):
        forests = [
            fit_forest(small_matrix, n_trees=8, m=3, max_depth=6, master_seed=11,
                       workers=w)
            for w in (1, 2, 4)
        ]
        reference = forests[0]
        for other in forests[1:]:
            for ta, tb in zip(reference.trees, other.trees):
                assert np.array_equal(ta.feature, tb.feature)
                assert np.array_equal(ta.threshold, tb.threshold)
                assert np.array_equal(ta.value, tb.value)
            for ba, bb in zip(reference.bootstrap_indices, other.bootstrap_indices):
                assert np.array_equal(ba, bb)

    def test_oob_fraction_statistics(self):
        n = 100
        fractions = []
        for b in range(1000):
            rng = forest_mod._tree_rng(99, b)
            boot = forest_mod._draw_bootstrap(rng, n)
            fractions.append(1.0 - np.unique(boot).size / n)
        mean_frac = float(np.mean(fractions))
        assert 0.35 <= mean_frac <= 0.39

    def test_empty_training_set(self):
        empty = FeatureMatrix.from_arrays(np.zeros((0, 2)), np.zeros(0))
        with pytest.raises(ValueError):
            fit_forest(empty, n_trees=1, m=1, max_depth=2, master_seed=0)

    def test_monotone_transform_invariance(self, small_matrix, monkeypatch):
        # Thresholds sit at midpoints, which are not equivariant under a
        # monotone map for query values strictly between two training
        # values; the invariance is exact at the points each tree trained
        # on, so check tree predictions at their own bootstrap rows, then
        # forest predictions with every row in bag.
        cubed = small_matrix.X.copy()
        cubed[:, 1] = cubed[:, 1] ** 3
        transformed = FeatureMatrix.from_arrays(cubed, small_matrix.y.copy())
        f_base = fit_forest(small_matrix, n_trees=6, m=3, max_depth=6, master_seed=5)
        f_cubed = fit_forest(transformed, n_trees=6, m=3, max_depth=6, master_seed=5)
        for ta, tb, boot in zip(
            f_base.trees, f_cubed.trees, f_base.bootstrap_indices
        ):
            assert np.array_equal(ta.feature, tb.feature)
            assert np.array_equal(ta.value, tb.value)
            assert np.array_equal(
                ta.predict(small_matrix.X[boot]), tb.predict(transformed.X[boot])
            )
        monkeypatch.setattr(
            forest_mod, "_draw_bootstrap", lambda rng, n: np.arange(n, dtype=np.int64)
        )
        g_base = fit_forest(small_matrix, n_trees=6, m=3, max_depth=6, master_seed=5)
        g_cubed = fit_forest(transformed, n_trees=6, m=3, max_depth=6, master_seed=5)
        assert np.array_equal(
            g_base.predict(small_matrix.X), g_cubed.predict(transformed.X)
        )


class TestSerialization:
    def test_round_trip_bit_exact(self, small_matrix, tmp_path):
        forest = fit_forest(small_matrix, n_trees=4, m=2, max_depth=5, master_seed=1)
        path = tmp_path / "model.e2cf"
        save_forest(forest, path)
        loaded = load_forest(path)
        assert loaded.n_trees == forest.n_trees
        assert loaded.m == forest.m
        assert loaded.max_depth == forest.max_depth
        assert loaded.master_seed == forest.master_seed
        assert loaded.columns == forest.columns
        for ta, tb in zip(forest.trees, loaded.trees):
            for name in ("feature", "threshold", "left", "right", "value",
                         "n_samples", "improvement"):
                assert getattr(ta, name).tobytes() == getattr(tb, name).tobytes()
        for a, b in zip(forest.oob_indices, loaded.oob_indices):
            assert np.array_equal(a, b)
        save_forest(loaded, tmp_path / "again.e2cf")
        assert (tmp_path / "again.e2cf").read_bytes() == path.read_bytes()

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.e2cf"
        path.write_bytes(b"NOTAFOREST")
        with pytest.raises(ValueError, match="magic"):
            load_forest(path)


@pytest.mark.skipif(not _kernels.NUMBA_AVAILABLE, reason="numba not installed")
class TestBackendEquivalence:
    def test_trees_bit_identical(self):
        rng_data = np.random.default_rng(21)
        X = rng_data.normal(size=(400, 6))
        y = rng_data.normal(size=400)
        boot = np.random.default_rng(22).integers(0, 400, size=400)
        for seed in range(3):
            args = (X, y, boot, 3, 9)
            a = _kernels.build_tree_arrays(
                *args, np.random.default_rng(seed), backend="numba"
            )
            b = _kernels.build_tree_arrays(
                *args, np.random.default_rng(seed), backend="numpy"
            )
            for key in a:
                assert np.array_equal(a[key], b[key]), key

    def test_scan_bit_identical(self):
        rng = np.random.default_rng(33)
        for _ in range(40):
            n = int(rng.integers(2, 120))
            p = int(rng.integers(1, 6))
            X = (
                rng.normal(size=(n, p))
                if rng.random() < 0.5
                else rng.integers(0, 5, size=(n, p)).astype(float)
            )
            y = rng.normal(size=n)
            rows = np.arange(n)
            feats = np.arange(p)
            a = _kernels.scan_best_split(X, y, rows, feats, backend="numba")
            b = _kernels.scan_best_split(X, y, rows, feats, backend="numpy")
            assert a == b
