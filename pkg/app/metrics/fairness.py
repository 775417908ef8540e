"""Balance of a partition with respect to a discrete confound."""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from app.utils.exceptions import InvalidArgumentError


@dataclass
class Balance:
    per_cluster: np.ndarray
    overall: float


def labels_to_partition(labels, n_clusters: int) -> List[np.ndarray]:
    labels = np.asarray(labels)
    return [np.flatnonzero(labels == k) for k in range(n_clusters)]


def balance(partition: Sequence[np.ndarray], confound, g_categories: int) -> Balance:
    """
    Per cluster, the smallest ratio between the counts of two confound classes inside it; 0 when a class is
    missing from the cluster or the cluster is empty. The overall balance is the minimum over clusters.

    Args:
        partition (Sequence[np.ndarray]): Index arrays of the clusters.
        confound (array-like): Discrete confound label of every sample.
        g_categories (int): The number of confound classes G.

    Returns:
        Balance: The per-cluster vector and the overall value.

    Raises:
        InvalidArgumentError: If a confound class never occurs in the dataset.
    """
    confound = np.asarray(confound, dtype=np.int64)
    present = np.bincount(confound, minlength=g_categories)
    if present.size != g_categories or np.any(present == 0):
        raise InvalidArgumentError("every confound class must occur in the dataset")

    per_cluster = np.zeros(len(partition), dtype=np.float64)
    for k, members in enumerate(partition):
        counts = np.bincount(confound[np.asarray(members, dtype=np.int64)], minlength=g_categories)
        if counts.min() > 0:
            per_cluster[k] = counts.min() / counts.max()
    overall = float(per_cluster.min()) if per_cluster.size else 0.0
    return Balance(per_cluster=per_cluster, overall=overall)
