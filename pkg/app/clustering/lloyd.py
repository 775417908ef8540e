"""
The module implements Lloyd's k-means iterations from k-means++ seeds. It is shared by the centroid
initialization of the deep model and by the k-means baseline.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.spatial.distance import cdist
from sklearn.cluster import kmeans_plusplus


@dataclass
class LloydResult:
    """Centroids, labels and inertia of one k-means run; `history` holds the inertia after every assignment step."""

    centroids: np.ndarray
    labels: np.ndarray
    inertia: float
    n_iter: int
    history: List[float] = field(default_factory=list)


def assign_nearest(X: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """
    Nearest-centroid labels under squared Euclidean distance, ties broken by the lowest index.

    Args:
        X (np.ndarray): N x d points.
        centroids (np.ndarray): K x d centroids.

    Returns:
        np.ndarray: N labels.
    """
    return np.argmin(cdist(X, centroids, "sqeuclidean"), axis=1)


def inertia_of(X: np.ndarray, centroids: np.ndarray, labels: np.ndarray) -> float:
    return float(np.sum((X - centroids[labels]) ** 2))


def seed_centroids(X: np.ndarray, n_clusters: int, seed: int) -> np.ndarray:
    """
    k-means++ seeding.

    Args:
        X (np.ndarray): N x d points, N >= n_clusters.
        n_clusters (int): The number of centroids K.
        seed (int): Seed of the sampling stream.

    Returns:
        np.ndarray: K x d initial centroids drawn from X.
    """
    centers, _ = kmeans_plusplus(X, n_clusters, random_state=seed)
    return centers


def lloyd(X: np.ndarray, centroids: np.ndarray, max_iters: int) -> LloydResult:
    """
    Alternates assignment and mean updates until the labels stop changing or `max_iters` updates were made.
    A cluster that loses all its points keeps its previous centroid, so the inertia never increases.

    Args:
        X (np.ndarray): N x d points.
        centroids (np.ndarray): K x d starting centroids.
        max_iters (int): The maximal number of update steps.

    Returns:
        LloydResult: The converged centroids with their labels and inertia.
    """
    X = np.asarray(X, dtype=np.float64)
    centroids = np.array(centroids, dtype=np.float64)
    labels = assign_nearest(X, centroids)
    history = [inertia_of(X, centroids, labels)]
    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        for k in range(centroids.shape[0]):
            members = labels == k
            if members.any():
                centroids[k] = X[members].mean(axis=0)
        new_labels = assign_nearest(X, centroids)
        history.append(inertia_of(X, centroids, new_labels))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    return LloydResult(
        centroids=centroids,
        labels=labels,
        inertia=history[-1],
        n_iter=n_iter,
        history=history,
    )
