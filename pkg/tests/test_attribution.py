import numpy as np
import pytest

from pendency import decision_forests as forests
from pendency.attribution import TreeShapExplainer, tree_shap
from pendency.errors import DataError

from oracles import brute_force_shap, expected_value


def random_tree_model(rng, depth, n_features, n_classes=2, n_rows=40):
    X = rng.normal(size=(n_rows, n_features))
    y = rng.integers(0, n_classes, size=n_rows)
    return forests.train_tree(X, y, forests.TreeParams(max_depth=depth), n_classes=n_classes), X


class TestSingleTree:
    def test_single_leaf_attributes_nothing(self):
        model = forests.train_tree([[1.0], [2.0]], [1, 1], n_classes=2)
        out = tree_shap(model, [1.5])
        assert out.contributions.tolist() == [0.0]
        assert out.base_value == out.output == 1.0

    def test_matches_brute_force_enumeration(self):
        rng = np.random.default_rng(0)
        for trial in range(30):
            depth = int(rng.integers(1, 4))
            n_features = int(rng.integers(1, 5))
            model, X = random_tree_model(rng, depth, n_features)
            explainer = TreeShapExplainer(model)
            row = X[int(rng.integers(X.shape[0]))]
            mine = explainer.attribute(row)
            oracle = brute_force_shap(model.tree, row, n_features, component=1)
            assert np.allclose(mine.contributions, oracle, atol=1e-8)
            base_oracle = expected_value(model.tree, row, set(), component=1)
            assert mine.base_value == pytest.approx(base_oracle, abs=1e-10)

    def test_local_accuracy(self):
        rng = np.random.default_rng(1)
        model, X = random_tree_model(rng, depth=6, n_features=5, n_rows=200)
        explainer = TreeShapExplainer(model)
        for row in X[:25]:
            out = explainer.attribute(row)
            assert abs(out.base_value + out.contributions.sum() - out.output) < 1e-6

    def test_repeated_feature_along_path(self):
        # force a deep tree over one feature: the path revisits it
        X = np.linspace(0, 1, 16).reshape(-1, 1)
        y = (np.arange(16) % 4 == 0).astype(int)
        model = forests.train_tree(X, y, forests.TreeParams(max_depth=4), n_classes=2)
        explainer = TreeShapExplainer(model)
        for row in X:
            out = explainer.attribute(row)
            assert abs(out.base_value + out.contributions.sum() - out.output) < 1e-9
            oracle = brute_force_shap(model.tree, row, 1, component=1)
            assert np.allclose(out.contributions, oracle, atol=1e-9)

    def test_unused_feature_gets_zero(self):
        X = np.column_stack([np.array([0.0, 0, 1, 1]), np.array([5.0, 5, 5, 5])])
        model = forests.train_tree(X, [0, 0, 1, 1], n_classes=2)
        out = tree_shap(model, [0.0, 5.0])
        assert out.contributions[1] == 0.0


class TestEnsembleAttribution:
    def test_forest_attribution_is_mean_of_trees(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(120, 4))
        y = (X[:, 0] + X[:, 1] > 0).astype(int)
        forest = forests.train_bagging(X, y, n_trees=3, params=forests.TreeParams(max_depth=4), seed=0)
        explainer = TreeShapExplainer(forest)
        row = X[0]
        whole = explainer.attribute(row)
        per_tree = []
        for tree in forest.trees:
            single = forests.TreeModel(tree=tree, n_classes=2, params=forest.params, n_features_in=4)
            per_tree.append(TreeShapExplainer(single).attribute(row))
        assert np.allclose(whole.contributions, np.mean([a.contributions for a in per_tree], axis=0))
        assert whole.base_value == pytest.approx(np.mean([a.base_value for a in per_tree]))

    def test_forest_local_accuracy_in_probability_space(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(150, 5))
        y = (X[:, 2] > 0).astype(int)
        forest = forests.train_random_forest(X, y, n_trees=10, seed=1)
        explainer = TreeShapExplainer(forest)
        for row in X[:10]:
            out = explainer.attribute(row)
            assert abs(out.base_value + out.contributions.sum() - out.output) < 1e-6
            assert out.output == pytest.approx(forest.predict_proba(row.reshape(1, -1))[0, 1])

    def test_gbdt_attributes_margin(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(100, 3))
        y = (X[:, 0] > 0).astype(int)
        model = forests.train_gbdt(X, y, n_rounds=10, max_depth=3)
        explainer = TreeShapExplainer(model)
        for row in X[:10]:
            out = explainer.attribute(row)
            margin = model.predict_margin(row.reshape(1, -1))[0]
            assert out.output == pytest.approx(margin, abs=1e-12)
            assert abs(out.base_value + out.contributions.sum() - out.output) < 1e-6

    def test_multiclass_needs_class_index(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(60, 3))
        y = rng.integers(0, 3, size=60)
        model = forests.train_tree(X, y, n_classes=3)
        with pytest.raises(DataError):
            tree_shap(model, X[0])
        out = tree_shap(model, X[0], class_index=2)
        assert abs(out.base_value + out.contributions.sum() - out.output) < 1e-9

    def test_class_index_bounds(self):
        model = forests.train_tree([[0.0], [1.0]], [0, 1])
        with pytest.raises(DataError):
            tree_shap(model, [0.0], class_index=5)

    def test_row_width_checked(self):
        model = forests.train_tree([[0.0, 1.0], [1.0, 0.0]], [0, 1])
        with pytest.raises(DataError):
            tree_shap(model, [0.0])
