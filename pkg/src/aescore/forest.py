"""Random forest of axis-aligned Gini-split decision trees.

Each tree trains on its own bootstrap sample with sqrt(d) feature candidates
per split; per-tree seeds derive from the forest seed, so the whole forest is
reproducible and trees could be grown in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import STREAM_TREE, derive_seed


@dataclass(frozen=True)
class TreeNode:
    feature: int | None  # None marks a leaf
    threshold: float
    left: "TreeNode | None"
    right: "TreeNode | None"
    counts: tuple[int, int]  # class counts at this node

    def predict(self, x: np.ndarray) -> int:
        node = self
        while node.feature is not None:
            node = node.left if x[node.feature] < node.threshold else node.right
        # tie breaks to label 0
        return 1 if node.counts[1] > node.counts[0] else 0


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[TreeNode, ...]
    n_trees: int
    seed: int
    n_features: int
    bootstraps: tuple[np.ndarray, ...]  # per-tree sample indices, for OOB checks


def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - (p ** 2).sum())


def _best_split(X, y, indices, feature_ids):
    best = None  # (impurity, feature, threshold)
    parent = _gini(np.bincount(y[indices], minlength=2))
    n = len(indices)
    for f in feature_ids:
        values = X[indices, f]
        order = np.argsort(values, kind="stable")
        sorted_vals = values[order]
        sorted_y = y[indices][order]
        # prefix class counts; candidate cuts sit between distinct values
        ones = np.cumsum(sorted_y)
        total_ones = ones[-1]
        for cut in range(1, n):
            if sorted_vals[cut] == sorted_vals[cut - 1]:
                continue
            left_ones = ones[cut - 1]
            left = np.array([cut - left_ones, left_ones], dtype=np.float64)
            right = np.array([(n - cut) - (total_ones - left_ones),
                              total_ones - left_ones], dtype=np.float64)
            impurity = (cut * _gini(left) + (n - cut) * _gini(right)) / n
            if impurity < parent - 1e-12 and (best is None or impurity < best[0] - 1e-12):
                threshold = float((sorted_vals[cut - 1] + sorted_vals[cut]) / 2.0)
                best = (impurity, int(f), threshold)
    return best


def _grow(X, y, indices, depth, max_depth, rng):
    counts = np.bincount(y[indices], minlength=2)
    node_counts = (int(counts[0]), int(counts[1]))
    if depth >= max_depth or counts.min() == 0 or len(indices) < 2:
        return TreeNode(None, 0.0, None, None, node_counts)
    d = X.shape[1]
    k = max(1, int(np.sqrt(d)))
    feature_ids = np.sort(rng.choice(d, size=k, replace=False))
    best = _best_split(X, y, indices, feature_ids)
    if best is None:
        return TreeNode(None, 0.0, None, None, node_counts)
    _, feature, threshold = best
    mask = X[indices, feature] < threshold
    left = _grow(X, y, indices[mask], depth + 1, max_depth, rng)
    right = _grow(X, y, indices[~mask], depth + 1, max_depth, rng)
    return TreeNode(feature, threshold, left, right, node_counts)


def rf_train(features, labels, n_trees: int = 10, max_depth: int = 12,
             seed: int = 0) -> ForestModel:
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.intp)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError(f"features {X.shape} and labels {y.shape} do not align")
    if X.shape[0] == 0:
        raise ValueError("need at least one sample")
    if len(np.unique(y)) < 2:
        raise ValueError("both classes must be present")
    if n_trees < 1 or max_depth < 1:
        raise ValueError("n_trees and max_depth must be >= 1")

    n = X.shape[0]
    trees = []
    bootstraps = []
    for t in range(n_trees):
        rng = np.random.default_rng(derive_seed(STREAM_TREE, seed, t))
        sample = rng.integers(0, n, size=n)
        trees.append(_grow(X, y, sample, 0, max_depth, rng))
        bootstraps.append(sample)
    return ForestModel(tuple(trees), n_trees, seed, X.shape[1], tuple(bootstraps))


def rf_predict(model: ForestModel, x) -> int:
    """Majority vote over trees; ties break to label 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"feature length {x.shape} != model dimension {model.n_features}")
    votes = sum(tree.predict(x) for tree in model.trees)
    return 1 if votes * 2 > model.n_trees else 0


def out_of_bag_accuracy(model: ForestModel, features, labels) -> float:
    """Accuracy on samples left out of each tree's bootstrap (majority vote)."""
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.intp)
    n = X.shape[0]
    correct = 0
    scored = 0
    for i in range(n):
        votes = [tree.predict(X[i]) for tree, boot in zip(model.trees, model.bootstraps)
                 if i not in boot]
        if not votes:
            continue
        pred = 1 if sum(votes) * 2 > len(votes) else 0
        scored += 1
        correct += int(pred == y[i])
    if scored == 0:
        raise ValueError("no out-of-bag samples; too few trees or samples")
    return correct / scored
