"""Decision trees and tree ensembles trained from scratch.

Greedy CART with Gini impurity for classification, second-order (Newton)
boosting with logistic loss for the binary boosted ensemble. Trees are stored
as node-parallel arrays so prediction is vectorized and serialization is
exact. All randomness is derived per tree from ``(seed, tree_index)`` so
results never depend on thread scheduling or ensemble size.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DataError
from .feature_pipeline import EncodedMatrix

KIND_TREE = "tree"
KIND_BAGGING = "bagging"
KIND_RANDOM_FOREST = "random_forest"
KIND_GBDT = "gbdt"

FORMAT_VERSION = 1


@dataclass(frozen=True)
class TreeParams:
    """Hyperparameters for a single CART tree.

    ``max_features`` is ``None`` (all features), ``"sqrt"``, a fraction in
    (0, 1], or an explicit count; subsets are redrawn at every node.
    """

    max_depth: int = 10
    min_samples_split: int = 2
    max_features: int | float | str | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_depth < 1:
            raise DataError("max_depth must be >= 1")
        if self.min_samples_split < 2:
            raise DataError("min_samples_split must be >= 2")

    def resolve_max_features(self, n_features: int) -> int:
        mf = self.max_features
        if mf is None or mf == "all":
            return n_features
        if mf == "sqrt":
            return min(n_features, math.ceil(math.sqrt(n_features)))
        if isinstance(mf, float):
            if not 0.0 < mf <= 1.0:
                raise DataError("fractional max_features must lie in (0, 1]")
            return min(n_features, max(1, math.ceil(mf * n_features)))
        if isinstance(mf, int):
            if mf < 1:
                raise DataError("max_features must be >= 1")
            return min(n_features, mf)
        raise DataError(f"unsupported max_features: {mf!r}")


class Tree:
    """Node-parallel arrays for one grown tree.

    ``feature`` is -1 at leaves; ``value`` holds class probabilities
    (classification) or the leaf weight (regression); ``cover`` is the number
    of training rows through each node; ``decrease`` is the split's impurity
    decrease (classification) or gain (regression), 0 at leaves.
    """

    def __init__(self, feature, threshold, left, right, cover, impurity, decrease, value):
        self.feature = np.asarray(feature, dtype=np.int32)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int32)
        self.right = np.asarray(right, dtype=np.int32)
        self.cover = np.asarray(cover, dtype=np.float64)
        self.impurity = np.asarray(impurity, dtype=np.float64)
        self.decrease = np.asarray(decrease, dtype=np.float64)
        self.value = np.asarray(value, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row."""
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            feat = self.feature[node]
            active = np.nonzero(feat >= 0)[0]
            if active.size == 0:
                return node
            cur = node[active]
            go_left = X[active, feat[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def leaf_values(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def max_path_depth(self) -> int:
        depth = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] < 0:
                depth = max(depth, d)
            else:
                stack.append((self.left[node], d + 1))
                stack.append((self.right[node], d + 1))
        return depth

    def to_json_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": [None if f < 0 else t for f, t in zip(self.feature.tolist(), self.threshold.tolist())],
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "cover": [int(c) for c in self.cover.tolist()],
            "impurity": self.impurity.tolist(),
            "decrease": self.decrease.tolist(),
            "value": self.value.tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: Mapping) -> "Tree":
        threshold = [math.nan if t is None else t for t in data["threshold"]]
        return cls(
            data["feature"], threshold, data["left"], data["right"],
            data["cover"], data["impurity"], data["decrease"], data["value"],
        )


class _TreeBuilder:
    """Accumulates node-parallel arrays during recursive growth."""

    def __init__(self):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.cover: list[float] = []
        self.impurity: list[float] = []
        self.decrease: list[float] = []
        self.value: list[list[float]] = []

    def add(self, cover, impurity, value) -> int:
        node_id = len(self.feature)
        self.feature.append(-1)
        self.threshold.append(math.nan)
        self.left.append(-1)
        self.right.append(-1)
        self.cover.append(float(cover))
        self.impurity.append(float(impurity))
        self.decrease.append(0.0)
        self.value.append([float(v) for v in np.atleast_1d(value)])
        return node_id

    def internalize(self, node_id, feature, threshold, decrease, left, right):
        self.feature[node_id] = int(feature)
        self.threshold[node_id] = float(threshold)
        self.decrease[node_id] = float(decrease)
        self.left[node_id] = left
        self.right[node_id] = right

    def build(self) -> Tree:
        return Tree(
            self.feature, self.threshold, self.left, self.right,
            self.cover, self.impurity, self.decrease, self.value,
        )


def _midpoint(a: float, b: float) -> float:
    # b can swallow the midpoint when a and b are adjacent floats; fall back
    # to a so rows valued b still go right.
    mid = (a + b) / 2.0
    return a if mid >= b else mid


def _gini_decreases(cl, nl, counts_node, imp_node, n):
    """Impurity decrease for every candidate left-partition.

    ``cl`` holds exact integer class counts as float64 and ``nl`` the left
    row counts, so both count-production strategies below feed the identical
    arithmetic chain and stay bit-for-bit comparable.
    """
    cr = counts_node - cl
    nr = float(n) - nl
    pl = cl / nl[:, None]
    gl = 1.0 - (pl * pl).sum(axis=1)
    pr = cr / nr[:, None]
    gr = 1.0 - (pr * pr).sum(axis=1)
    return imp_node - (nl * gl + nr * gr) / n


# Counting sort pays off when a column's integer span is small next to the
# node size; the cutover only affects speed, never the produced counts.
_COUNTING_SLACK = 64
_COUNTING_FACTOR = 4


def _candidate_counts(v, yn, n, n_classes, integral):
    """Left class counts, left sizes, and boundary values per candidate split.

    Returns ``(cl, nl, lo_vals, hi_vals)`` or None when the column is
    constant. Both strategies emit identical exact integers in float64.
    """
    if integral:
        vi = v.astype(np.int64)
        lo = int(vi.min())
        hi = int(vi.max())
        if hi == lo:
            return None
        span = hi - lo + 1
        if span <= _COUNTING_FACTOR * n + _COUNTING_SLACK:
            flat = (vi - lo) * n_classes + yn
            per_value = np.bincount(flat, minlength=span * n_classes).reshape(span, n_classes)
            row_counts = per_value.sum(axis=1)
            present = np.nonzero(row_counts)[0]
            if present.size < 2:
                return None
            cl = np.cumsum(per_value[present[:-1]], axis=0).astype(np.float64)
            nl = np.cumsum(row_counts[present[:-1]]).astype(np.float64)
            values = (present + lo).astype(np.float64)
            return cl, nl, values[:-1], values[1:]
    order = np.argsort(v, kind="stable")
    sv = v[order]
    bounds = np.nonzero(sv[:-1] != sv[1:])[0]
    if bounds.size == 0:
        return None
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), yn[order]] = 1.0
    cum = np.cumsum(onehot, axis=0)
    cl = cum[bounds]
    nl = (bounds + 1).astype(np.float64)
    return cl, nl, sv[bounds], sv[bounds + 1]


def _best_classifier_split(X, y, rows, feats, counts_node, imp_node, n_classes, integral):
    """Best (feature, threshold, decrease) over midpoints of sorted values.

    Ties break toward the lowest feature index, then the lowest threshold,
    via strict-improvement scans in ascending order.
    """
    n = rows.size
    yn = y[rows]
    best = None
    best_dec = -math.inf
    # Zero-decrease splits are taken when nothing better exists (as long as
    # candidates remain): depth-two interactions like XOR need the first cut.
    for j in feats:
        found = _candidate_counts(X[rows, j], yn, n, n_classes, integral[j])
        if found is None:
            continue
        cl, nl, lo_vals, hi_vals = found
        dec = _gini_decreases(cl, nl, counts_node, imp_node, n)
        i = int(np.argmax(dec))
        if dec[i] > best_dec:
            best_dec = float(dec[i])
            best = (int(j), _midpoint(float(lo_vals[i]), float(hi_vals[i])), best_dec)
    return best


def _grow_classifier(X, y, n_classes, params: TreeParams, rng: np.random.Generator) -> Tree:
    X = np.asfortranarray(X)
    n, d = X.shape
    max_feats = params.resolve_max_features(d)
    builder = _TreeBuilder()
    # Integral columns within exact float64 range qualify for counting sort.
    integral = [
        bool(np.all(col == np.floor(col)) and np.all(np.abs(col) < 2**52))
        for col in X.T
    ]

    def grow(rows: np.ndarray, depth: int) -> int:
        counts = np.bincount(y[rows], minlength=n_classes).astype(np.float64)
        probs = counts / rows.size
        imp = 1.0 - float((probs * probs).sum())
        node_id = builder.add(rows.size, imp, probs)
        if depth >= params.max_depth or rows.size < params.min_samples_split or imp == 0.0:
            return node_id
        if max_feats < d:
            feats = np.sort(rng.choice(d, size=max_feats, replace=False))
        else:
            feats = np.arange(d)
        found = _best_classifier_split(X, y, rows, feats, counts, imp, n_classes, integral)
        if found is None:
            return node_id
        j, thr, dec = found
        mask = X[rows, j] <= thr
        left_id = grow(rows[mask], depth + 1)
        right_id = grow(rows[~mask], depth + 1)
        builder.internalize(node_id, j, thr, dec, left_id, right_id)
        return node_id

    grow(np.arange(n), 0)
    return builder.build()


def _best_regressor_split(X, g, h, rows, feats, lam):
    n = rows.size
    gn = g[rows]
    hn = h[rows]
    g_sum = float(gn.sum())
    h_sum = float(hn.sum())
    parent = g_sum * g_sum / (h_sum + lam) if h_sum + lam > 0 else 0.0
    best = None
    best_gain = 0.0
    for j in feats:
        v = X[rows, j]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        bounds = np.nonzero(sv[:-1] != sv[1:])[0]
        if bounds.size == 0:
            continue
        cg = np.cumsum(gn[order])
        ch = np.cumsum(hn[order])
        gl = cg[bounds]
        hl = ch[bounds]
        gr = g_sum - gl
        hr = h_sum - hl
        # A zero denominator only occurs with lam == 0 on a fully saturated
        # side; treat that side's score as 0 rather than splitting on it.
        with np.errstate(divide="ignore", invalid="ignore"):
            left_score = np.where(hl + lam > 0, gl * gl / (hl + lam), 0.0)
            right_score = np.where(hr + lam > 0, gr * gr / (hr + lam), 0.0)
        gain = 0.5 * (left_score + right_score - parent)
        i = int(np.argmax(gain))
        if gain[i] > best_gain:
            best_gain = float(gain[i])
            best = (int(j), _midpoint(float(sv[bounds[i]]), float(sv[bounds[i] + 1])), best_gain)
    return best


def _grow_regressor(X, g, h, max_depth, lam, min_samples_split=2) -> Tree:
    n, d = X.shape
    builder = _TreeBuilder()
    feats = np.arange(d)

    def grow(rows: np.ndarray, depth: int) -> int:
        g_sum = float(g[rows].sum())
        h_sum = float(h[rows].sum())
        weight = -g_sum / (h_sum + lam) if h_sum + lam > 0 else 0.0
        node_id = builder.add(rows.size, 0.0, [weight])
        if depth >= max_depth or rows.size < min_samples_split:
            return node_id
        found = _best_regressor_split(X, g, h, rows, feats, lam)
        if found is None:
            return node_id
        j, thr, gain = found
        mask = X[rows, j] <= thr
        left_id = grow(rows[mask], depth + 1)
        right_id = grow(rows[~mask], depth + 1)
        builder.internalize(node_id, j, thr, gain, left_id, right_id)
        return node_id

    grow(np.arange(n), 0)
    return builder.build()


# ---------------------------------------------------------------------------
# Models
# ---------------------------------------------------------------------------


@dataclass
class TreeModel:
    """A single CART classifier."""

    tree: Tree
    n_classes: int
    params: TreeParams
    feature_names: list[str] | None = None
    class_names: list[str] | None = None
    n_features_in: int | None = None
    kind: str = KIND_TREE

    @property
    def trees(self) -> list[Tree]:
        return [self.tree]

    @property
    def n_features(self) -> int | None:
        if self.n_features_in is not None:
            return self.n_features_in
        return len(self.feature_names) if self.feature_names else None

    def predict_proba(self, X) -> np.ndarray:
        X = _check_matrix(X, self.n_features)
        return self.tree.leaf_values(X)


@dataclass
class EnsembleModel:
    """Bagged/random-forest probability averaging or boosted additive margins."""

    kind: str
    trees: list[Tree]
    n_classes: int
    params: TreeParams | None = None
    learning_rate: float = 0.3
    reg_lambda: float = 1.0
    base_score: float = 0.0
    n_rounds: int | None = None
    feature_names: list[str] | None = None
    class_names: list[str] | None = None
    n_features_in: int | None = None

    @property
    def n_features(self) -> int | None:
        if self.n_features_in is not None:
            return self.n_features_in
        return len(self.feature_names) if self.feature_names else None

    def predict_margin(self, X) -> np.ndarray:
        if self.kind != KIND_GBDT:
            raise DataError(f"margins are only defined for {KIND_GBDT} models")
        X = _check_matrix(X, self.n_features)
        margin = np.full(X.shape[0], self.base_score, dtype=np.float64)
        for tree in self.trees:
            margin += self.learning_rate * tree.leaf_values(X)[:, 0]
        return margin

    def predict_proba(self, X) -> np.ndarray:
        if self.kind == KIND_GBDT:
            p = _sigmoid(self.predict_margin(X))
            return np.column_stack([1.0 - p, p])
        X = _check_matrix(X, self.n_features)
        acc = np.zeros((X.shape[0], self.n_classes), dtype=np.float64)
        for tree in self.trees:
            acc += tree.leaf_values(X)
        return acc / len(self.trees)


Model = TreeModel | EnsembleModel


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _as_array(X) -> tuple[np.ndarray, list[str] | None]:
    if isinstance(X, EncodedMatrix):
        return X.to_dense(), list(X.feature_names)
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise DataError(f"design matrix must be 2-d, got shape {arr.shape}")
    return arr, None


def _check_matrix(X, n_features: int | None) -> np.ndarray:
    arr, _ = _as_array(X)
    if n_features is not None and arr.shape[1] != n_features:
        raise DataError(f"matrix has {arr.shape[1]} columns, model expects {n_features}")
    return arr


def _check_training_inputs(X, y) -> tuple[np.ndarray, np.ndarray, list[str] | None]:
    arr, names = _as_array(X)
    y = np.asarray(y)
    if arr.shape[0] == 0:
        raise DataError("training matrix has no rows")
    if y.shape[0] != arr.shape[0]:
        raise DataError(f"{y.shape[0]} labels for {arr.shape[0]} rows")
    if np.isnan(arr).any():
        raise DataError("design matrix contains NaN; impute upstream")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(y == y.astype(np.int64)):
            raise DataError("labels must be integers")
    y = y.astype(np.int64)
    if y.min() < 0:
        raise DataError("labels must be nonnegative")
    return arr, y, names


def train_tree(
    X,
    y,
    params: TreeParams | None = None,
    n_classes: int | None = None,
    feature_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> TreeModel:
    """Grow one greedy CART classifier."""
    params = params or TreeParams()
    arr, y, inferred = _check_training_inputs(X, y)
    k = n_classes or int(y.max()) + 1
    if y.max() >= k:
        raise DataError(f"label {y.max()} outside [0, {k})")
    rng = np.random.default_rng((params.seed,))
    tree = _grow_classifier(arr, y, k, params, rng)
    return TreeModel(
        tree=tree,
        n_classes=k,
        params=params,
        feature_names=list(feature_names) if feature_names else inferred,
        class_names=list(class_names) if class_names else None,
        n_features_in=arr.shape[1],
    )


def _train_forest(
    kind: str,
    X,
    y,
    n_trees: int,
    params: TreeParams,
    seed: int,
    bootstrap: bool,
    threads: int,
    n_classes: int | None,
    feature_names,
    class_names,
) -> EnsembleModel:
    if n_trees < 1:
        raise DataError("n_trees must be >= 1")
    arr, y, inferred = _check_training_inputs(X, y)
    k = n_classes or int(y.max()) + 1
    n = arr.shape[0]

    def one_tree(index: int) -> Tree:
        rng = np.random.default_rng((seed, index))
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        return _grow_classifier(arr[rows], y[rows], k, params, rng)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trees = list(pool.map(one_tree, range(n_trees)))
    else:
        trees = [one_tree(t) for t in range(n_trees)]
    return EnsembleModel(
        kind=kind,
        trees=trees,
        n_classes=k,
        params=params,
        feature_names=list(feature_names) if feature_names else inferred,
        class_names=list(class_names) if class_names else None,
        n_features_in=arr.shape[1],
    )


def train_bagging(
    X,
    y,
    n_trees: int = 100,
    params: TreeParams | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    threads: int = 1,
    n_classes: int | None = None,
    feature_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> EnsembleModel:
    """Bootstrap-aggregated trees considering every feature at each split."""
    params = params or TreeParams()
    return _train_forest(
        KIND_BAGGING, X, y, n_trees, params, seed, bootstrap, threads,
        n_classes, feature_names, class_names,
    )


def train_random_forest(
    X,
    y,
    n_trees: int = 100,
    params: TreeParams | None = None,
    seed: int = 0,
    bootstrap: bool = True,
    threads: int = 1,
    n_classes: int | None = None,
    feature_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> EnsembleModel:
    """Bagging plus per-node feature subsampling (sqrt by default)."""
    params = params or TreeParams(max_features="sqrt")
    return _train_forest(
        KIND_RANDOM_FOREST, X, y, n_trees, params, seed, bootstrap, threads,
        n_classes, feature_names, class_names,
    )


def train_gbdt(
    X,
    y,
    n_rounds: int = 100,
    learning_rate: float = 0.3,
    reg_lambda: float = 1.0,
    max_depth: int = 6,
    base_score: float | None = None,
    min_samples_split: int = 2,
    feature_names: Sequence[str] | None = None,
    class_names: Sequence[str] | None = None,
) -> EnsembleModel:
    """Newton-boosted regression trees for binary classification.

    Each round fits a tree to the logistic gradients/hessians with split gain
    ``0.5 * (GL^2/(HL+lam) + GR^2/(HR+lam) - G^2/(H+lam))`` and leaf weight
    ``-G/(H+lam)``, then adds ``learning_rate`` times its output to the
    margin. ``base_score`` defaults to the training log-odds.
    """
    if n_rounds < 1:
        raise DataError("n_rounds must be >= 1")
    if reg_lambda < 0:
        raise DataError("reg_lambda must be >= 0")
    arr, y, inferred = _check_training_inputs(X, y)
    if not set(np.unique(y)) <= {0, 1}:
        raise DataError("boosted training requires binary 0/1 labels")
    yf = y.astype(np.float64)

    if base_score is None:
        rate = min(max(float(yf.mean()), 1e-12), 1.0 - 1e-12)
        base_score = math.log(rate / (1.0 - rate))

    margin = np.full(arr.shape[0], base_score, dtype=np.float64)
    trees: list[Tree] = []
    for _ in range(n_rounds):
        p = _sigmoid(margin)
        g = p - yf
        h = p * (1.0 - p)
        tree = _grow_regressor(arr, g, h, max_depth, reg_lambda, min_samples_split)
        margin = margin + learning_rate * tree.leaf_values(arr)[:, 0]
        trees.append(tree)
    return EnsembleModel(
        kind=KIND_GBDT,
        trees=trees,
        n_classes=2,
        learning_rate=learning_rate,
        reg_lambda=reg_lambda,
        base_score=base_score,
        n_rounds=n_rounds,
        feature_names=list(feature_names) if feature_names else inferred,
        class_names=list(class_names) if class_names else None,
        n_features_in=arr.shape[1],
    )


def predict_proba(model: Model, X) -> np.ndarray:
    """Per-row class-probability vectors for any trained model."""
    return model.predict_proba(X)


def impurity_importance(model: Model) -> np.ndarray:
    """Per-feature split-importance weights, normalized to sum to 1.

    Classification nodes contribute their cover-weighted Gini decrease;
    boosted-regression nodes contribute their split gain. Features never
    split on get weight 0. All-leaf models return zeros.
    """
    n_features = model.n_features
    if n_features is None:
        n_features = 1 + max(int(t.feature.max(initial=-1)) for t in model.trees)
        n_features = max(n_features, 1)
    totals = np.zeros(n_features, dtype=np.float64)
    for tree in model.trees:
        internal = np.nonzero(tree.feature >= 0)[0]
        if internal.size == 0:
            continue
        if model.kind == KIND_GBDT:
            contrib = tree.decrease[internal]
        else:
            contrib = (tree.cover[internal] / tree.cover[0]) * tree.decrease[internal]
        np.add.at(totals, tree.feature[internal], contrib)
    total = totals.sum()
    return totals / total if total > 0 else totals


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def model_to_json_dict(model: Model) -> dict:
    out: dict = {
        "format_version": FORMAT_VERSION,
        "kind": model.kind,
        "n_classes": model.n_classes,
        "feature_names": model.feature_names,
        "class_names": model.class_names,
        "n_features_in": model.n_features,
        "trees": [t.to_json_dict() for t in model.trees],
    }
    if isinstance(model, TreeModel) or model.kind in (KIND_BAGGING, KIND_RANDOM_FOREST):
        p = model.params
        out["params"] = {
            "max_depth": p.max_depth,
            "min_samples_split": p.min_samples_split,
            "max_features": p.max_features,
            "seed": p.seed,
        }
    if model.kind == KIND_GBDT:
        out["learning_rate"] = model.learning_rate
        out["reg_lambda"] = model.reg_lambda
        out["base_score"] = model.base_score
        out["n_rounds"] = model.n_rounds
    return out


def model_from_json_dict(data: Mapping) -> Model:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise DataError(f"unsupported model format version: {version!r}")
    kind = data["kind"]
    trees = [Tree.from_json_dict(t) for t in data["trees"]]
    params = None
    if "params" in data and data["params"] is not None:
        p = data["params"]
        mf = p["max_features"]
        params = TreeParams(p["max_depth"], p["min_samples_split"], mf, p["seed"])
    common = dict(
        n_classes=int(data["n_classes"]),
        feature_names=data.get("feature_names"),
        class_names=data.get("class_names"),
        n_features_in=data.get("n_features_in"),
    )
    if kind == KIND_TREE:
        return TreeModel(tree=trees[0], params=params or TreeParams(), **common)
    if kind in (KIND_BAGGING, KIND_RANDOM_FOREST):
        return EnsembleModel(kind=kind, trees=trees, params=params, **common)
    if kind == KIND_GBDT:
        return EnsembleModel(
            kind=kind,
            trees=trees,
            learning_rate=float(data["learning_rate"]),
            reg_lambda=float(data["reg_lambda"]),
            base_score=float(data["base_score"]),
            n_rounds=data.get("n_rounds"),
            **common,
        )
    raise DataError(f"unknown model kind: {kind!r}")


def save_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> Model:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json_dict(json.load(fh))
