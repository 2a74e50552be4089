import json
import math

import numpy as np
import pytest

from pendency import decision_forests as forests
from pendency.errors import DataError
from pendency.feature_pipeline import EncodedMatrix

from oracles import oracle_best_split, oracle_decrease


class TestSplitOracle:
    def test_two_point_separation(self):
        model = forests.train_tree([[0.0], [1.0]], [0, 1])
        tree = model.tree
        assert tree.n_nodes == 3
        assert tree.decrease[0] == 0.5
        assert tree.impurity[tree.left[0]] == 0.0
        assert tree.impurity[tree.right[0]] == 0.0

    def test_xor_is_learnable_at_depth_two(self):
        X = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        y = [0, 1, 1, 0]
        model = forests.train_tree(X, y, forests.TreeParams(max_depth=2))
        preds = np.argmax(model.predict_proba(X), axis=1)
        assert np.array_equal(preds, y)

    def test_pure_labels_make_single_leaf(self):
        model = forests.train_tree([[0.0], [1.0], [2.0]], [1, 1, 1])
        assert model.tree.n_nodes == 1

    def test_root_split_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(300):
            n = int(rng.integers(2, 13))
            d = int(rng.integers(1, 4))
            n_classes = int(rng.integers(2, 4))
            if rng.random() < 0.5:
                X = rng.normal(size=(n, d))
            else:
                X = rng.integers(0, 4, size=(n, d)).astype(np.float64)
            y = rng.integers(0, n_classes, size=n)
            model = forests.train_tree(X, y, forests.TreeParams(max_depth=1), n_classes=n_classes)
            oracle = oracle_best_split(X.tolist(), y.tolist(), n_classes)
            tree = model.tree
            if tree.feature[0] < 0:
                # leaf only when pure or no candidate thresholds exist
                assert oracle is None or len(set(y.tolist())) == 1
            else:
                assert oracle is not None
                achieved = oracle_decrease(
                    X.tolist(), y.tolist(), n_classes, int(tree.feature[0]), float(tree.threshold[0])
                )
                assert achieved == oracle[2]
                checked += 1
        assert checked > 100

    def test_tie_break_prefers_lowest_feature_and_threshold(self):
        # identical columns: ties must resolve to feature 0
        X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        y = np.array([0, 0, 1, 1])
        model = forests.train_tree(X, y, forests.TreeParams(max_depth=1))
        assert model.tree.feature[0] == 0


class TestTreeShape:
    def test_depth_bound_holds(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(300, 5))
        y = rng.integers(0, 3, size=300)
        for depth in (1, 3, 7):
            model = forests.train_tree(X, y, forests.TreeParams(max_depth=depth))
            assert model.tree.max_path_depth() <= depth

    def test_cover_adds_up(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(100, 3))
        y = rng.integers(0, 2, size=100)
        tree = forests.train_tree(X, y).tree
        for node in range(tree.n_nodes):
            if tree.feature[node] >= 0:
                assert tree.cover[node] == tree.cover[tree.left[node]] + tree.cover[tree.right[node]]

    def test_leaf_probabilities_sum_to_one(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(80, 3))
        y = rng.integers(0, 3, size=80)
        tree = forests.train_tree(X, y, n_classes=3).tree
        assert np.allclose(tree.value.sum(axis=1), 1.0, atol=1e-9)

    def test_monotone_transform_leaves_predictions_unchanged(self):
        rng = np.random.default_rng(3)
        X = rng.uniform(size=(120, 4))
        y = rng.integers(0, 2, size=120)
        base = forests.train_tree(X, y, forests.TreeParams(max_depth=6))
        X2 = X.copy()
        X2[:, 1] = np.exp(3.0 * X2[:, 1])
        X2[:, 3] = X2[:, 3] ** 3 + 5.0
        transformed = forests.train_tree(X2, y, forests.TreeParams(max_depth=6))
        assert np.array_equal(base.predict_proba(X), transformed.predict_proba(X2))
        assert np.array_equal(base.tree.feature, transformed.tree.feature)


class TestEnsembles:
    def data(self, n=200, d=6, seed=0):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(n, d))
        y = ((X[:, 0] + X[:, 1] > 0)).astype(int)
        return X, y

    def test_bagging_without_bootstrap_single_tree_equals_tree(self):
        X, y = self.data()
        single = forests.train_tree(X, y, forests.TreeParams(max_depth=4))
        bagged = forests.train_bagging(
            X, y, n_trees=1, params=forests.TreeParams(max_depth=4), bootstrap=False
        )
        assert np.array_equal(single.predict_proba(X), bagged.predict_proba(X))
        assert bagged.trees[0].to_json_dict() == single.tree.to_json_dict()

    def test_same_seed_identical_forest(self):
        X, y = self.data()
        a = forests.train_bagging(X, y, n_trees=5, seed=3)
        b = forests.train_bagging(X, y, n_trees=5, seed=3)
        assert forests.model_to_json_dict(a) == forests.model_to_json_dict(b)

    def test_thread_count_does_not_change_model(self):
        X, y = self.data()
        params = forests.TreeParams(max_depth=5, max_features="sqrt")
        a = forests.train_random_forest(X, y, n_trees=8, params=params, seed=1, threads=1)
        b = forests.train_random_forest(X, y, n_trees=8, params=params, seed=1, threads=4)
        assert forests.model_to_json_dict(a) == forests.model_to_json_dict(b)

    def test_growing_the_forest_keeps_earlier_trees(self):
        X, y = self.data()
        small = forests.train_bagging(X, y, n_trees=3, seed=5)
        large = forests.train_bagging(X, y, n_trees=6, seed=5)
        for t in range(3):
            assert small.trees[t].to_json_dict() == large.trees[t].to_json_dict()

    def test_single_feature_rf_equals_bagging(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(100, 1))
        y = (X[:, 0] > 0).astype(int)
        rf = forests.train_random_forest(X, y, n_trees=4, seed=2)
        bag = forests.train_bagging(X, y, n_trees=4, seed=2)
        assert np.array_equal(rf.predict_proba(X), bag.predict_proba(X))

    def test_rf_degenerate_config_equals_single_tree(self):
        X, y = self.data()
        params = forests.TreeParams(max_depth=4, max_features=None)
        rf = forests.train_random_forest(X, y, n_trees=1, params=params, bootstrap=False)
        single = forests.train_tree(X, y, forests.TreeParams(max_depth=4))
        assert np.array_equal(rf.predict_proba(X), single.predict_proba(X))

    def test_forest_of_identical_trees_averages_to_tree(self):
        X, y = self.data()
        forest = forests.train_bagging(X, y, n_trees=3, params=forests.TreeParams(max_depth=4), bootstrap=False)
        single = forests.train_tree(X, y, forests.TreeParams(max_depth=4))
        assert np.allclose(forest.predict_proba(X), single.predict_proba(X))

    def test_pure_leaf_probability(self):
        model = forests.train_tree([[0.0], [1.0]], [0, 1])
        proba = model.predict_proba([[0.0]])
        assert proba.tolist() == [[1.0, 0.0]]

    def test_column_mismatch_errors(self):
        X, y = self.data()
        model = forests.train_tree(X, y)
        with pytest.raises(DataError):
            model.predict_proba(X[:, :3])

    def test_empty_matrix_errors(self):
        with pytest.raises(DataError):
            forests.train_tree(np.zeros((0, 2)), [])

    def test_length_mismatch_errors(self):
        with pytest.raises(DataError):
            forests.train_tree([[1.0], [2.0]], [0])

    def test_nan_rejected(self):
        with pytest.raises(DataError):
            forests.train_tree([[np.nan], [1.0]], [0, 1])


class TestGbdt:
    def test_symmetric_labels_keep_zero_margin(self):
        X = [[1.0], [1.0], [1.0], [1.0]]
        model = forests.train_gbdt(X, [1, 1, 0, 0], n_rounds=1, learning_rate=1.0,
                                   reg_lambda=0.0, base_score=0.0)
        assert model.predict_margin(X).tolist() == [0.0] * 4

    def test_closed_form_newton_step(self):
        # constant feature forces a single leaf; at base margin 0 each
        # gradient is 0.5 - y, so G = -1, H = 1, weight = 1.0
        X = [[1.0], [1.0], [1.0], [1.0]]
        model = forests.train_gbdt(X, [1, 1, 1, 0], n_rounds=1, learning_rate=1.0,
                                   reg_lambda=0.0, base_score=0.0)
        margin = model.predict_margin(X)
        assert margin.tolist() == [1.0] * 4
        p = model.predict_proba(X)[0, 1]
        assert abs(p - 1.0 / (1.0 + math.exp(-1.0))) < 1e-12

    def test_zero_tree_ensemble_is_logistic_base(self):
        model = forests.EnsembleModel(kind=forests.KIND_GBDT, trees=[], n_classes=2,
                                      base_score=0.4, n_features_in=1)
        proba = model.predict_proba([[0.0]])
        assert proba[0, 1] == pytest.approx(1.0 / (1.0 + math.exp(-0.4)), abs=1e-15)

    def test_training_log_loss_nonincreasing(self):
        from pendency.evaluation import log_loss

        for seed, (eta, lam) in zip(range(3), [(0.3, 1.0), (1.0, 1.0), (0.5, 0.0)]):
            rng = np.random.default_rng(seed)
            X = rng.normal(size=(120, 4))
            y = (X[:, 0] + 0.5 * rng.normal(size=120) > 0).astype(int)
            losses = []
            for rounds in range(1, 26, 6):
                model = forests.train_gbdt(X, y, n_rounds=rounds, learning_rate=eta,
                                           reg_lambda=lam, max_depth=3)
                losses.append(log_loss(model.predict_proba(X), y))
            assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_non_binary_labels_rejected(self):
        with pytest.raises(DataError):
            forests.train_gbdt([[0.0], [1.0], [2.0]], [0, 1, 2], n_rounds=1)

    def test_default_base_score_is_log_odds(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        y = np.array([1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        model = forests.train_gbdt(X, y, n_rounds=1)
        assert model.base_score == pytest.approx(math.log(0.3 / 0.7), abs=1e-12)


class TestImportance:
    def test_single_split_concentrates_importance(self):
        model = forests.train_tree([[0.0, 5.0], [1.0, 5.0]], [0, 1])
        weights = forests.impurity_importance(model)
        assert weights.tolist() == [1.0, 0.0]

    def test_importance_sums_to_one(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(150, 5))
        y = rng.integers(0, 2, size=150)
        for model in (
            forests.train_tree(X, y),
            forests.train_random_forest(X, y, n_trees=5, seed=0),
            forests.train_gbdt(X, y, n_rounds=5),
        ):
            weights = forests.impurity_importance(model)
            assert abs(weights.sum() - 1.0) <= 1e-9
            assert (weights >= 0).all()

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(120, 4))
        y = (X[:, 2] > 0).astype(int)
        base = forests.impurity_importance(forests.train_tree(X, y))
        perm = [3, 0, 2, 1]
        permuted = forests.impurity_importance(forests.train_tree(X[:, perm], y))
        assert np.allclose(permuted, base[perm])

    def test_all_leaf_model_gives_zeros(self):
        model = forests.train_tree([[1.0], [1.0]], [0, 0])
        assert forests.impurity_importance(model).tolist() == [0.0]


class TestSerialization:
    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(100, 4))
        y = rng.integers(0, 3, size=100)
        model = forests.train_random_forest(X, y, n_trees=3, seed=1,
                                            feature_names=["a", "b", "c", "d"],
                                            class_names=["u", "v", "w"])
        path = tmp_path / "model.json"
        forests.save_model(model, path)
        clone = forests.load_model(path)
        assert clone.kind == model.kind
        assert clone.feature_names == model.feature_names
        for original, loaded in zip(model.trees, clone.trees):
            assert np.array_equal(original.threshold[original.feature >= 0],
                                  loaded.threshold[loaded.feature >= 0])
            assert np.array_equal(original.value, loaded.value)
        assert np.array_equal(clone.predict_proba(X), model.predict_proba(X))

    def test_gbdt_round_trip(self, tmp_path):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(60, 3))
        y = (X[:, 0] > 0).astype(int)
        model = forests.train_gbdt(X, y, n_rounds=4)
        path = tmp_path / "gbdt.json"
        forests.save_model(model, path)
        clone = forests.load_model(path)
        assert np.array_equal(clone.predict_margin(X), model.predict_margin(X))

    def test_unknown_version_rejected(self):
        with pytest.raises(DataError):
            forests.model_from_json_dict({"format_version": 99, "kind": "tree", "trees": []})

    def test_encoded_matrix_input_carries_names(self):
        matrix = EncodedMatrix(np.array([[0.0], [1.0]]), ["only"])
        model = forests.train_tree(matrix, [0, 1])
        assert model.feature_names == ["only"]
