"""Random forest of axis-aligned Gini trees with bootstrap resampling.

Trees are grown until pure or below two samples, choosing among
ceil(sqrt(d)) randomly drawn features per node. Per-tree randomness is
derived from (seed, tree index), so training is deterministic and
independent of any scheduling. Leaves store the class-frequency pair of
the bootstrap samples that reach them; the ensemble score is the mean
leaf positive-class frequency across trees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingError

LEAF = -1


@dataclass
class DecisionTree:
    """Flat node arrays; children of internal nodes via left/right indices.

    A sample routes left when ``x[feature] <= threshold`` (thresholds are
    observed feature values, never midpoints, so comparisons are exact).
    """

    feature: np.ndarray  # (nodes,), LEAF for leaves
    threshold: np.ndarray  # (nodes,)
    left: np.ndarray  # (nodes,)
    right: np.ndarray  # (nodes,)
    counts: np.ndarray  # (nodes, 2) class counts of samples reaching the node

    def max_depth(self) -> int:
        depth = np.zeros(len(self.feature), dtype=int)
        for node in range(len(self.feature)):
            if self.feature[node] != LEAF:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max()) if len(depth) else 0


@dataclass
class TreeEnsemble:
    trees: list[DecisionTree]
    t: int
    seed: int
    feature_subsample: int
    n_features: int
    bootstrap_indices: list[np.ndarray] = field(repr=False, default_factory=list)


def _gini_weighted(cum_pos: np.ndarray, cuts: np.ndarray, total: int, total_pos: int) -> np.ndarray:
    """Weighted child Gini for splits after each cut position (0-based)."""
    n_left = cuts + 1.0
    n_right = total - n_left
    pos_left = cum_pos[cuts]
    pos_right = total_pos - pos_left
    p_left = pos_left / n_left
    p_right = pos_right / n_right
    gini_left = 1.0 - p_left**2 - (1.0 - p_left) ** 2
    gini_right = 1.0 - p_right**2 - (1.0 - p_right) ** 2
    return (n_left * gini_left + n_right * gini_right) / total


def _best_split(X: np.ndarray, y: np.ndarray, feats: np.ndarray):
    """Best (feature, threshold) by Gini over candidate features.

    Ties keep the earliest candidate feature and the smallest threshold.
    Returns None when every candidate feature is constant on the node.
    """
    m = len(y)
    total_pos = int(y.sum())
    best = None  # (impurity, feature, threshold)
    for f in feats:
        v = X[:, f]
        order = np.argsort(v, kind="stable")
        sv = v[order]
        cum_pos = np.cumsum(y[order])
        cuts = np.nonzero(sv[:-1] < sv[1:])[0]
        if cuts.size == 0:
            continue
        impurity = _gini_weighted(cum_pos, cuts, m, total_pos)
        pick = int(np.argmin(impurity))
        if best is None or impurity[pick] < best[0]:
            best = (float(impurity[pick]), int(f), float(sv[cuts[pick]]))
    return None if best is None else best[1:]


def _grow_tree(X: np.ndarray, y: np.ndarray, mtry: int, rng: np.random.Generator) -> DecisionTree:
    d = X.shape[1]
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[tuple[int, int]] = []

    # DFS, left branch first; children are appended after their parent so
    # node 0 is always the root
    stack: list[tuple[np.ndarray, int, bool]] = [(np.arange(len(y)), -1, False)]
    while stack:
        idx, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        y_node = y[idx]
        n_pos = int(y_node.sum())
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append((len(idx) - n_pos, n_pos))

        if len(idx) < 2 or n_pos == 0 or n_pos == len(idx):
            continue
        feats = rng.choice(d, size=mtry, replace=False)
        split = _best_split(X[idx], y_node, feats)
        if split is None:
            continue
        f, t = split
        feature[node] = f
        threshold[node] = t
        go_left = X[idx, f] <= t
        stack.append((idx[~go_left], node, True))
        stack.append((idx[go_left], node, False))

    return DecisionTree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        counts=np.array(counts, dtype=float),
    )


def train_ensemble(features, labels, t: int = 500, seed: int = 0) -> TreeEnsemble:
    """Train t trees, each on a seeded bootstrap resample of size n."""
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or len(X) != len(y):
        raise TrainingError(f"features must be (n, d) with one label per row, got {X.shape}")
    n_pos = int((y == 1).sum())
    n_neg = int((y == 0).sum())
    if n_pos < 2 or n_neg < 2:
        raise TrainingError(f"need at least 2 examples per class, got {n_neg} negative / {n_pos} positive")

    n, d = X.shape
    mtry = math.ceil(math.sqrt(d))
    trees = []
    bootstraps = []
    for tree_idx in range(t):
        rng = np.random.default_rng([seed, tree_idx])
        boot = rng.integers(0, n, size=n)
        trees.append(_grow_tree(X[boot], y[boot], mtry, rng))
        bootstraps.append(boot)
    return TreeEnsemble(
        trees=trees, t=t, seed=seed, feature_subsample=mtry,
        n_features=d, bootstrap_indices=bootstraps,
    )


def _tree_scores(tree: DecisionTree, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=int)
    pending = tree.feature[node] != LEAF
    while pending.any():
        rows = np.nonzero(pending)[0]
        at = node[rows]
        go_left = X[rows, tree.feature[at]] <= tree.threshold[at]
        node[rows] = np.where(go_left, tree.left[at], tree.right[at])
        pending[rows] = tree.feature[node[rows]] != LEAF
    leaf_counts = tree.counts[node]
    return leaf_counts[:, 1] / leaf_counts.sum(axis=1)


def ensemble_scores(ensemble: TreeEnsemble, features) -> np.ndarray:
    """Mean leaf positive-class frequency over trees, one score per row."""
    X = np.atleast_2d(np.asarray(features, dtype=float))
    if X.shape[1] != ensemble.n_features:
        raise TrainingError(
            f"feature arity {X.shape[1]} does not match ensemble arity {ensemble.n_features}"
        )
    acc = np.zeros(len(X))
    for tree in ensemble.trees:
        acc += _tree_scores(tree, X)
    return acc / len(ensemble.trees)


def ensemble_score(ensemble: TreeEnsemble, feature_vector) -> float:
    """Score a single feature vector; see ensemble_scores."""
    return float(ensemble_scores(ensemble, np.asarray(feature_vector, dtype=float)[None, :])[0])


def tree_to_nested(tree: DecisionTree) -> dict:
    """Serialize to nested split/leaf objects (built iteratively)."""
    nested: dict[int, dict] = {}
    for node in range(len(tree.feature) - 1, -1, -1):
        if tree.feature[node] == LEAF:
            nested[node] = {"leaf": {"counts": [int(c) for c in tree.counts[node]]}}
        else:
            nested[node] = {
                "split": {
                    "feature": int(tree.feature[node]),
                    "threshold": float(tree.threshold[node]),
                    "left": nested.pop(int(tree.left[node])),
                    "right": nested.pop(int(tree.right[node])),
                }
            }
    return nested[0]


def tree_from_nested(obj: dict) -> DecisionTree:
    feature: list[int] = []
    threshold: list[float] = []
    left: list[int] = []
    right: list[int] = []
    counts: list[tuple[float, float]] = []

    stack: list[tuple[dict, int, bool]] = [(obj, -1, False)]
    while stack:
        node_obj, parent, is_right = stack.pop()
        node = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node
        if "leaf" in node_obj:
            n0, n1 = node_obj["leaf"]["counts"]
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append((float(n0), float(n1)))
        else:
            split = node_obj["split"]
            feature.append(int(split["feature"]))
            threshold.append(float(split["threshold"]))
            left.append(-1)
            right.append(-1)
            counts.append((0.0, 0.0))
            stack.append((split["right"], node, True))
            stack.append((split["left"], node, False))

    return DecisionTree(
        feature=np.array(feature, dtype=int),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=int),
        right=np.array(right, dtype=int),
        counts=np.array(counts, dtype=float),
    )
