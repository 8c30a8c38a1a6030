"""Dataset-derived aleatoric uncertainty from embedding clusters.

Calibration embeddings are grouped by agglomerative clustering under the
Ward criterion; each cluster's normalized label entropy becomes the
aleatoric uncertainty of its members, and unseen responses inherit the
entropy of the nearest centroid (Euclidean).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .corpus import LABELS, ResponseRecord
from .errors import ClusteringError


@dataclass(eq=False)
class ClusterModel:
    """Fitted Ward partition of the calibration subset.

    Cluster indices are 1..K, numbered by ascending smallest member
    position in the (id-sorted) calibration records.
    """

    k: int
    assignments: dict[str, int]
    centroids: np.ndarray  # (K, D), mean of member embeddings
    entropies: np.ndarray  # (K,), normalized label entropy in [0, 1]
    label_dists: np.ndarray  # (K, 2), columns ordered [P(y=0), P(y=1)]

    def singleton_clusters(self) -> list[int]:
        """Cluster indices with a single member (weak entropy estimates)."""
        sizes = np.zeros(self.k, dtype=int)
        for cluster in self.assignments.values():
            sizes[cluster - 1] += 1
        return [int(i) + 1 for i in np.nonzero(sizes == 1)[0]]


def _validate_embeddings(embeddings) -> np.ndarray:
    X = np.asarray(embeddings, dtype=float)
    if X.ndim != 2:
        raise ClusteringError(f"embeddings must be a 2-D array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ClusteringError("embeddings contain non-finite values")
    return X


def _agglomerate(X: np.ndarray, k: int) -> tuple[np.ndarray, list[float]]:
    """Merge under the Ward criterion until k clusters remain.

    Cluster-to-cluster costs follow the Lance-Williams recurrence seeded
    with half squared Euclidean distances, which reproduces the Ward merge
    cost |A||B|/(|A|+|B|) * ||mu_A - mu_B||^2 exactly. Ties pick the
    lexicographically smallest pair of cluster representatives, where a
    cluster's representative is its smallest member index.
    """
    n = X.shape[0]
    labels = np.zeros(n, dtype=int)
    if k == n:
        labels[:] = np.arange(1, n + 1)
        return labels, []

    sq = ((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
    cost = 0.5 * sq
    np.fill_diagonal(cost, np.inf)

    # slot of a cluster == its smallest member index, so row-major argmin
    # over the symmetric matrix realizes the documented tie-break
    sizes = np.ones(n)
    members: list[list[int]] = [[i] for i in range(n)]
    active = np.ones(n, dtype=bool)
    merge_costs: list[float] = []

    for _ in range(n - k):
        flat = int(np.argmin(cost))
        i, j = divmod(flat, n)
        d_ij = cost[i, j]
        merge_costs.append(float(d_ij))

        others = np.nonzero(active)[0]
        others = others[(others != i) & (others != j)]
        if others.size:
            s_i, s_j, s_c = sizes[i], sizes[j], sizes[others]
            new = ((s_i + s_c) * cost[i, others] + (s_j + s_c) * cost[j, others] - s_c * d_ij) / (
                s_i + s_j + s_c
            )
            cost[i, others] = new
            cost[others, i] = new
        cost[j, :] = np.inf
        cost[:, j] = np.inf
        sizes[i] += sizes[j]
        members[i].extend(members[j])
        active[j] = False

    for rank, slot in enumerate(np.nonzero(active)[0], start=1):
        labels[members[slot]] = rank
    return labels, merge_costs


def ward_cluster(embeddings, k: int) -> np.ndarray:
    """Partition points into k clusters; returns labels in 1..k.

    Clusters are numbered by ascending smallest member index.
    """
    X = _validate_embeddings(embeddings)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ClusteringError(f"k must be in [1, {n}], got {k}")
    labels, _ = _agglomerate(X, k)
    return labels


def ward_merge_costs(embeddings) -> list[float]:
    """Ward merge costs of the full dendrogram (n-1 merges, in order)."""
    X = _validate_embeddings(embeddings)
    _, costs = _agglomerate(X, 1)
    return costs


def cluster_label_distribution(
    assignments: Mapping[str, int], gold_labels: Mapping[str, int]
) -> np.ndarray:
    """Per-cluster empirical label frequencies, rows ordered by cluster index."""
    k = max(assignments.values())
    counts = np.zeros((k, len(LABELS)))
    for rid, cluster in assignments.items():
        counts[cluster - 1, gold_labels[rid]] += 1
    totals = counts.sum(axis=1)
    if np.any(totals == 0):
        raise ClusteringError("every cluster in 1..K must be nonempty")
    return counts / totals[:, None]


def cluster_entropy(label_dist: Sequence[float]) -> float:
    """Normalized Shannon entropy of a label distribution, in [0, 1]."""
    p = np.asarray(label_dist, dtype=float)
    if abs(p.sum() - 1.0) > 1e-6:
        raise ClusteringError(f"label distribution sums to {p.sum()}, not 1")
    h = 0.0
    for x in p:
        if x > 0:
            h -= x * math.log(x)
    return min(1.0, h / math.log(len(p)))


def fit(calibration_records: Sequence[ResponseRecord], k: int) -> ClusterModel:
    """Cluster calibration embeddings and compute per-cluster entropies.

    Records are ordered by id before clustering so the partition depends
    only on the record set, not on iteration order.
    """
    records = sorted(calibration_records, key=lambda r: r.id)
    X = _validate_embeddings([r.embedding for r in records])
    labels = ward_cluster(X, k)
    assignments = {rec.id: int(lab) for rec, lab in zip(records, labels)}
    gold = {rec.id: rec.gold_label for rec in records}
    label_dists = cluster_label_distribution(assignments, gold)
    entropies = np.array([cluster_entropy(dist) for dist in label_dists])
    centroids = np.vstack([X[labels == c].mean(axis=0) for c in range(1, k + 1)])
    return ClusterModel(
        k=k,
        assignments=assignments,
        centroids=centroids,
        entropies=entropies,
        label_dists=label_dists,
    )


def assign_uncertainty(embedding, model: ClusterModel) -> float:
    """Entropy of the cluster with the nearest centroid (Euclidean).

    Distance ties resolve to the lowest cluster index.
    """
    emb = np.asarray(embedding, dtype=float)
    if emb.shape != (model.centroids.shape[1],):
        raise ClusteringError(
            f"embedding has dimension {emb.shape}, model expects ({model.centroids.shape[1]},)"
        )
    dists = ((model.centroids - emb) ** 2).sum(axis=1)
    return float(model.entropies[int(np.argmin(dists))])


def _mean_silhouette(X: np.ndarray, labels: np.ndarray) -> float | None:
    """Mean silhouette coefficient; None when undefined for every point.

    Singleton-cluster points score 0 (Rousseeuw's convention); points with
    zero mean distance to both their own and the nearest other cluster are
    excluded as undefined.
    """
    n = X.shape[0]
    dists = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    values = []
    for i in range(n):
        b = min(dists[i, labels == c].mean() for c in np.unique(labels) if c != labels[i])
        own = (labels == labels[i]) & (np.arange(n) != i)
        if not own.any():
            if b > 0.0:
                values.append(0.0)
            continue
        a = dists[i, own].mean()
        denom = max(a, b)
        if denom == 0.0:
            continue
        values.append((b - a) / denom)
    if not values:
        return None
    return float(np.mean(values))


def choose_k(embeddings, k_grid: Sequence[int]) -> int:
    """Pick the grid K maximizing the mean silhouette coefficient.

    Ties resolve to the smallest K. If the silhouette is undefined for the
    whole grid (degenerate data), falls back to the smallest grid K with a
    warning.
    """
    if len(k_grid) == 0:
        raise ClusteringError("k_grid is empty")
    X = _validate_embeddings(embeddings)
    n = X.shape[0]
    grid = sorted(set(int(k) for k in k_grid))
    for k in grid:
        if not 2 <= k <= n - 1:
            raise ClusteringError(f"grid value {k} outside [2, {n - 1}]")

    best_k: int | None = None
    best_score = -np.inf
    for k in grid:
        labels = ward_cluster(X, k)
        score = _mean_silhouette(X, labels)
        if score is not None and score > best_score:
            best_k, best_score = k, score
    if best_k is None:
        warnings.warn(
            f"silhouette undefined for every grid value; falling back to K={grid[0]}",
            stacklevel=2,
        )
        return grid[0]
    return best_k


def default_k_grid(n: int) -> list[int]:
    """Doubling grid 2, 4, 8, ... capped at min(64, n/5) and n-1."""
    cap = min(64, n // 5, n - 1)
    grid = []
    k = 2
    while k <= cap:
        grid.append(k)
        k *= 2
    return grid or [2]


def save_cluster_model(model: ClusterModel, path: str | Path) -> None:
    obj = {
        "k": model.k,
        "centroids": [[float(v) for v in row] for row in model.centroids],
        "entropies": [float(v) for v in model.entropies],
        "label_dists": [[float(v) for v in row] for row in model.label_dists],
        "assignments": {rid: model.assignments[rid] for rid in sorted(model.assignments)},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def load_cluster_model(path: str | Path) -> ClusterModel:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    return ClusterModel(
        k=int(obj["k"]),
        assignments={rid: int(c) for rid, c in obj["assignments"].items()},
        centroids=np.asarray(obj["centroids"], dtype=float),
        entropies=np.asarray(obj["entropies"], dtype=float),
        label_dists=np.asarray(obj["label_dists"], dtype=float),
    )
