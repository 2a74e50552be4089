"""Per-feature attribution of tree predictions via Shapley values.

The game value of a feature subset is the tree's expected output when the
subset's features are fixed to the row's values and the rest are marginalized
along the tree's paths with training cover weights. Because every leaf's
reach probability factors per feature, each leaf's Shapley contribution has a
closed form over symmetric sums, which this module evaluates exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .decision_forests import KIND_GBDT, EnsembleModel, Model, Tree
from .errors import DataError


@dataclass
class Attribution:
    """Additive explanation of one prediction.

    ``base_value + contributions.sum()`` equals ``output`` (the attributed
    model quantity: positive-class probability, a chosen class probability,
    or the boosted margin).
    """

    base_value: float
    contributions: np.ndarray
    output: float
    feature_names: list[str] | None = None


@dataclass
class _LeafPath:
    """One leaf: its value and the path factors grouped by feature."""

    value: float
    features: list[int]
    ratios: list[float]  # product of cover ratios for each feature's nodes
    conditions: list[list[tuple[float, bool]]]  # (threshold, go_left) per node


def _enumerate_leaf_paths(tree: Tree, leaf_component: int) -> list[_LeafPath]:
    paths: list[_LeafPath] = []

    def walk(node: int, feats: list[int], ratios: dict[int, float], conds: dict[int, list]):
        f = int(tree.feature[node])
        if f < 0:
            value = float(tree.value[node, leaf_component])
            paths.append(
                _LeafPath(
                    value=value,
                    features=list(feats),
                    ratios=[ratios[j] for j in feats],
                    conditions=[list(conds[j]) for j in feats],
                )
            )
            return
        thr = float(tree.threshold[node])
        cover = tree.cover[node]
        fresh = f not in ratios
        if fresh:
            feats.append(f)
            ratios[f] = 1.0
            conds[f] = []
        old_ratio = ratios[f]
        for child, go_left in ((int(tree.left[node]), True), (int(tree.right[node]), False)):
            ratios[f] = old_ratio * float(tree.cover[child] / cover)
            conds[f].append((thr, go_left))
            walk(child, feats, ratios, conds)
            conds[f].pop()
        ratios[f] = old_ratio
        if fresh:
            feats.pop()
            del ratios[f]
            del conds[f]

    walk(0, [], {}, {})
    return paths


def _shapley_weights(d: int) -> np.ndarray:
    # w[k] = k! (d-1-k)! / d!
    fact = [math.factorial(i) for i in range(d + 1)]
    return np.array([fact[k] * fact[d - 1 - k] / fact[d] for k in range(d)])


class TreeShapExplainer:
    """Reusable explainer over a trained tree or ensemble.

    For classifiers the attributed output is the probability of
    ``class_index`` (defaults to the positive class of a binary model); for
    boosted models it is the additive margin and ``class_index`` is ignored.
    """

    def __init__(self, model: Model, class_index: int | None = None):
        if not model.trees:
            raise DataError("cannot attribute an untrained/empty model")
        self.model = model
        self.is_margin = isinstance(model, EnsembleModel) and model.kind == KIND_GBDT
        if self.is_margin:
            self.class_index = 0  # regression trees store one value
        else:
            if class_index is None:
                if model.n_classes != 2:
                    raise DataError(
                        "class_index is required for multiclass attribution"
                    )
                class_index = 1
            if not 0 <= class_index < model.n_classes:
                raise DataError(f"class_index {class_index} outside [0, {model.n_classes})")
            self.class_index = class_index
        self._paths = [_enumerate_leaf_paths(t, self.class_index) for t in model.trees]
        self._weights = {}

    def _weights_for(self, d: int) -> np.ndarray:
        if d not in self._weights:
            self._weights[d] = _shapley_weights(d)
        return self._weights[d]

    def _tree_attribution(self, paths: list[_LeafPath], row: np.ndarray, phi: np.ndarray) -> float:
        """Add one tree's contributions into ``phi``; returns its base value."""
        base = 0.0
        for leaf in paths:
            if leaf.value == 0.0:
                continue
            d = len(leaf.features)
            b = leaf.ratios
            base_factor = math.prod(b)
            base += leaf.value * base_factor
            if d == 0:
                continue
            a = [
                1.0 if all((row[j] <= thr) == go_left for thr, go_left in conds) else 0.0
                for j, conds in zip(leaf.features, leaf.conditions)
            ]
            # degree-d coefficients of prod_j (b_j + a_j t)
            poly = np.zeros(d + 1)
            poly[0] = 1.0
            for k in range(d):
                upper = poly[: k + 1] * a[k]
                poly[: k + 1] *= b[k]
                poly[1 : k + 2] += upper
            w = self._weights_for(d)
            for i in range(d):
                reduced = _divide_out(poly, b[i], a[i], d)
                phi_i = leaf.value * (a[i] - b[i]) * float(np.dot(w, reduced))
                phi[leaf.features[i]] += phi_i
        return base

    def attribute(self, row) -> Attribution:
        row = np.asarray(row, dtype=np.float64).reshape(-1)
        n_features = self.model.n_features
        if n_features is not None and row.size != n_features:
            raise DataError(f"row has {row.size} features, model expects {n_features}")

        phi = np.zeros(row.size, dtype=np.float64)
        base = 0.0
        for paths in self._paths:
            base += self._tree_attribution(paths, row, phi)

        if self.is_margin:
            model: EnsembleModel = self.model
            eta = model.learning_rate
            base = model.base_score + eta * base
            phi *= eta
            output = float(model.predict_margin(row.reshape(1, -1))[0])
        else:
            n_trees = len(self.model.trees)
            base /= n_trees
            phi /= n_trees
            output = float(self.model.predict_proba(row.reshape(1, -1))[0, self.class_index])
        return Attribution(
            base_value=base,
            contributions=phi,
            output=output,
            feature_names=self.model.feature_names,
        )


def _divide_out(poly: np.ndarray, b: float, a: float, d: int) -> np.ndarray:
    """Coefficients of poly / (b + a t), exact for a in {0, 1} and b > 0."""
    if a == 0.0:
        return poly[:d] / b
    out = np.empty(d)
    out[d - 1] = poly[d]
    for k in range(d - 1, 0, -1):
        out[k - 1] = poly[k] - b * out[k]
    return out


def tree_shap(model: Model, row, class_index: int | None = None) -> Attribution:
    """Shapley attribution of one row's prediction.

    ``base_value`` is the cover-weighted expected output over the training
    distribution encoded in the trees; contributions sum to the prediction
    minus the base. Ensembles average per-tree attributions (probability
    space) or sum them scaled by the learning rate (margin space).
    """
    return TreeShapExplainer(model, class_index=class_index).attribute(row)
