"""
This module contains the k-means baseline: scikit-learn's Lloyd solver started from k-means++ seeds, restarted
several times with independent seeds, keeping the restart of lowest inertia.
"""

import logging
from dataclasses import dataclass
from typing import List

import numpy as np
from joblib import Parallel, delayed
from sklearn.cluster import KMeans
from threadpoolctl import threadpool_limits

from app.clustering.lloyd import LloydResult, assign_nearest, inertia_of, seed_centroids
from app.utils.exceptions import InvalidArgumentError
from app.utils.helper import derive_seed


@dataclass
class KMeansResult:
    """The best restart of a k-means fit."""

    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    best_restart: int
    n_iter: int

    @property
    def partition(self) -> List[np.ndarray]:
        return [np.flatnonzero(self.labels == k) for k in range(self.centroids.shape[0])]


def _single_run(X: np.ndarray, n_clusters: int, max_iters: int, seed: int) -> LloydResult:
    seeds = seed_centroids(X, n_clusters, seed)
    if max_iters == 0:
        labels = assign_nearest(X, seeds)
        return LloydResult(centroids=seeds, labels=labels, inertia=inertia_of(X, seeds, labels), n_iter=0)
    # one thread: fixed reduction order
    with threadpool_limits(limits=1):
        model = KMeans(
            n_clusters=n_clusters,
            init=seeds,
            n_init=1,
            max_iter=max_iters,
            tol=0.0,
            algorithm="lloyd",
            random_state=seed,
        ).fit(X)
    return LloydResult(
        centroids=model.cluster_centers_,
        labels=model.labels_.astype(np.int64),
        inertia=float(model.inertia_),
        n_iter=int(model.n_iter_),
    )


def kmeans(
    X: np.ndarray,
    n_clusters: int,
    max_iters: int = 300,
    n_init: int = 10,
    seed: int = 0,
    n_jobs: int = 1,
) -> KMeansResult:
    """
    Fits k-means with `n_init` restarts.

    Restarts may run in parallel; each has its own derived seed and the winner is chosen by (inertia, restart
    index), so the result does not depend on `n_jobs`.

    Args:
        X (np.ndarray): N x D data.
        n_clusters (int): The number of clusters K.
        max_iters (int): Lloyd iterations per restart; 0 keeps the k-means++ seeds.
        n_init (int): The number of restarts.
        seed (int): The parent seed.
        n_jobs (int): joblib workers.

    Returns:
        KMeansResult: Labels, centroids and inertia of the best restart.

    Raises:
        InvalidArgumentError: If N < K or n_init < 1.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError("X must be a matrix")
    if n_clusters < 1 or X.shape[0] < n_clusters:
        raise InvalidArgumentError(f"need N >= K >= 1, got N={X.shape[0]}, K={n_clusters}")
    if n_init < 1:
        raise InvalidArgumentError("n_init must be at least 1")

    runs = Parallel(n_jobs=n_jobs)(
        delayed(_single_run)(X, n_clusters, max_iters, derive_seed(seed, restart))
        for restart in range(n_init)
    )
    best = min(range(n_init), key=lambda i: (runs[i].inertia, i))
    logging.debug("k-means: best restart %d of %d, inertia %.6f", best, n_init, runs[best].inertia)
    return KMeansResult(
        labels=runs[best].labels,
        centroids=runs[best].centroids,
        inertia=runs[best].inertia,
        best_restart=best,
        n_iter=runs[best].n_iter,
    )
