"""Seeded k-means with a small-cluster outlier merge.

Clusters that converge below ``min_cluster_size`` are relabeled -1
(the uncategorized bucket) instead of being kept as micro-topics.
"""

from __future__ import annotations

import numpy as np

from ._validation import check_array_2d, check_positive_int

OUTLIER_LABEL = -1


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centers[0] = X[first]
    d2 = np.sum((X - centers[0]) ** 2, axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with a chosen center
            centers[i:] = X[int(rng.integers(n))]
            break
        probs = d2 / total
        idx = int(rng.choice(n, p=probs))
        centers[i] = X[idx]
        d2 = np.minimum(d2, np.sum((X - centers[i]) ** 2, axis=1))
    return centers


class KMeans:
    """Lloyd iterations with k-means++ seeding.

    Stops when every centroid moves less than ``tol`` (Euclidean) or after
    ``max_iter`` sweeps. Ties in assignment break toward the lowest cluster
    index, empty clusters are reseeded at the point farthest from its
    current center, so runs are deterministic per seed.
    """

    def __init__(self, n_clusters: int, seed: int = 0, max_iter: int = 300,
                 tol: float = 1e-6, min_cluster_size: int = 1):
        self.n_clusters = n_clusters
        self.seed = seed
        self.max_iter = max_iter
        self.tol = tol
        self.min_cluster_size = min_cluster_size

    def get_params(self, deep: bool = True) -> dict:
        return {
            "n_clusters": self.n_clusters,
            "seed": self.seed,
            "max_iter": self.max_iter,
            "tol": self.tol,
            "min_cluster_size": self.min_cluster_size,
        }

    def set_params(self, **params) -> "KMeans":
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValueError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X) -> "KMeans":
        X = check_array_2d(X, "embedding")
        k = check_positive_int(self.n_clusters, "n_clusters")
        check_positive_int(self.min_cluster_size, "min_cluster_size")
        n = X.shape[0]
        if k > n:
            raise ValueError(f"n_clusters={k} exceeds n_docs={n}")

        rng = np.random.default_rng(self.seed)
        centers = _kmeans_pp_init(X, k, rng)
        inertia_path = []
        labels = np.zeros(n, dtype=np.int64)
        for _ in range(self.max_iter):
            d2 = _pairwise_sq_dists(X, centers)
            labels = np.argmin(d2, axis=1)
            inertia_path.append(float(d2[np.arange(n), labels].sum()))
            new_centers = centers.copy()
            for j in range(k):
                members = labels == j
                if members.any():
                    new_centers[j] = X[members].mean(axis=0)
                else:
                    # reseed dead cluster at the globally worst-fit point
                    worst = int(np.argmax(d2[np.arange(n), labels]))
                    new_centers[j] = X[worst]
            shift = np.sqrt(np.sum((new_centers - centers) ** 2, axis=1)).max()
            centers = new_centers
            if shift < self.tol:
                break
        d2 = _pairwise_sq_dists(X, centers)
        labels = np.argmin(d2, axis=1)
        inertia_path.append(float(d2[np.arange(n), labels].sum()))

        self.cluster_centers_ = centers
        self.inertia_path_ = inertia_path
        self.inertia_ = inertia_path[-1]
        self.raw_labels_ = labels
        self.labels_ = merge_small_clusters(labels, self.min_cluster_size)
        return self

    def fit_predict(self, X) -> np.ndarray:
        return self.fit(X).labels_

    def predict(self, X) -> np.ndarray:
        if not hasattr(self, "cluster_centers_"):
            raise RuntimeError("KMeans is not fitted")
        X = check_array_2d(X, "embedding")
        labels = np.argmin(_pairwise_sq_dists(X, self.cluster_centers_), axis=1)
        return labels


def _pairwise_sq_dists(X: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # ||x - c||^2 expanded; clip guards tiny negative round-off
    d2 = (
        np.sum(X**2, axis=1)[:, None]
        - 2.0 * X @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.maximum(d2, 0.0)


def merge_small_clusters(labels: np.ndarray, min_cluster_size: int) -> np.ndarray:
    """Relabel clusters smaller than min_cluster_size to the outlier bucket."""
    labels = np.asarray(labels).copy()
    values, counts = np.unique(labels, return_counts=True)
    for value, count in zip(values, counts):
        if value != OUTLIER_LABEL and count < min_cluster_size:
            labels[labels == value] = OUTLIER_LABEL
    return labels
