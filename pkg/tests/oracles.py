"""Independent reference implementations used to cross-check the package.

Everything here is deliberately brute force: exhaustive enumeration in pure
Python, pairwise counting, and full subset sums. These stay independent of
the code paths they verify.
"""

import itertools
import math

import numpy as np


# -- greedy-split reference --------------------------------------------------

def oracle_gini(y, n_classes):
    n = len(y)
    counts = [0.0] * n_classes
    for label in y:
        counts[label] += 1.0
    acc = 0.0
    for c in counts:
        p = c / n
        acc += p * p
    return 1.0 - acc


def oracle_decrease(X, y, n_classes, feature, threshold):
    """Impurity decrease of one split, same algebraic chain as the trainer."""
    n = len(y)
    left = [i for i in range(n) if X[i][feature] <= threshold]
    right = [i for i in range(n) if X[i][feature] > threshold]
    if not left or not right:
        return None
    nl, nr = float(len(left)), float(len(right))
    gl = oracle_gini([y[i] for i in left], n_classes)
    gr = oracle_gini([y[i] for i in right], n_classes)
    imp = oracle_gini(list(y), n_classes)
    return imp - (nl * gl + nr * gr) / n


def oracle_best_split(X, y, n_classes):
    """Best decrease over every (feature, midpoint) pair; zero-decrease
    candidates count because the trainer splits whenever candidates exist."""
    best = -math.inf
    found = None
    d = len(X[0])
    for j in range(d):
        values = sorted(set(row[j] for row in X))
        for a, b in zip(values[:-1], values[1:]):
            threshold = (a + b) / 2.0
            if threshold >= b:
                threshold = a
            dec = oracle_decrease(X, y, n_classes, j, threshold)
            if dec is not None and dec > best:
                best = dec
                found = (j, threshold, dec)
    return found


# -- ranking-metric references ------------------------------------------------

def roc_auc_pairwise_oracle(scores, labels):
    """O(n^2) count of positive-over-negative wins, ties at one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                total += 1.0
            elif p == q:
                total += 0.5
    return total / (len(pos) * len(neg))


def pr_auc_sweep_oracle(scores, labels):
    """Exhaustive threshold sweep over distinct scores, descending."""
    n_pos = sum(labels)
    thresholds = sorted(set(scores), reverse=True)
    ap = 0.0
    prev_recall = 0.0
    for t in thresholds:
        predicted = [s >= t for s in scores]
        tp = sum(1 for p, y in zip(predicted, labels) if p and y == 1)
        fp = sum(1 for p, y in zip(predicted, labels) if p and y == 0)
        precision = tp / (tp + fp)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


# -- attribution reference ----------------------------------------------------

def expected_value(tree, x, subset, component):
    """Tree output with ``subset`` features fixed to ``x`` and the rest
    marginalized down both branches by training cover."""

    def rec(node):
        f = tree.feature[node]
        if f < 0:
            return float(tree.value[node, component])
        if f in subset:
            child = tree.left[node] if x[f] <= tree.threshold[node] else tree.right[node]
            return rec(child)
        wl = tree.cover[tree.left[node]] / tree.cover[node]
        wr = tree.cover[tree.right[node]] / tree.cover[node]
        return wl * rec(tree.left[node]) + wr * rec(tree.right[node])

    return rec(0)


def brute_force_shap(tree, x, n_features, component):
    """Shapley values by full subset enumeration with factorial weights."""
    phi = np.zeros(n_features)
    players = list(range(n_features))
    for i in players:
        others = [j for j in players if j != i]
        for size in range(len(others) + 1):
            weight = (
                math.factorial(size)
                * math.factorial(n_features - size - 1)
                / math.factorial(n_features)
            )
            for subset in itertools.combinations(others, size):
                gain = expected_value(tree, x, set(subset) | {i}, component) - expected_value(
                    tree, x, set(subset), component
                )
                phi[i] += weight * gain
    return phi


# -- hashing reference ----------------------------------------------------------

def fnv1a64_oracle(token: str) -> int:
    h = 0xCBF29CE484222325
    for b in token.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h
