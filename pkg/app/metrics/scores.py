"""
This module contains the external clustering scores: accuracy under the optimal one-to-one label matching,
normalized mutual information, adjusted Rand index, and the confound leakage built on NMI.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.stats import entropy
from sklearn.metrics import adjusted_rand_score, mutual_info_score
from sklearn.metrics.cluster import contingency_matrix

from app.datasets.bundle import ConfoundLabels
from app.utils.exceptions import InvalidArgumentError

LEAKAGE_BINS = 10


@dataclass(frozen=True)
class ContingencyTable:
    """Co-occurrence counts, one row per predicted label and one column per true label present."""

    counts: np.ndarray
    n: int

    @property
    def shape(self) -> Tuple[int, int]:
        return self.counts.shape


def _check_pair(pred, true) -> Tuple[np.ndarray, np.ndarray]:
    pred = np.asarray(pred).ravel()
    true = np.asarray(true).ravel()
    if pred.size != true.size:
        raise InvalidArgumentError(f"label vectors differ in length: {pred.size} != {true.size}")
    return pred, true


def contingency_table(pred, true) -> ContingencyTable:
    """
    Builds the contingency table of two labelings.

    Args:
        pred (array-like): Predicted labels.
        true (array-like): Reference labels.

    Returns:
        ContingencyTable: The dense count matrix.

    Raises:
        InvalidArgumentError: If the labelings differ in length.
    """
    pred, true = _check_pair(pred, true)
    if pred.size == 0:
        return ContingencyTable(counts=np.zeros((0, 0), dtype=np.int64), n=0)
    counts = contingency_matrix(pred, true).astype(np.int64)
    return ContingencyTable(counts=counts, n=int(pred.size))


def hungarian(cost) -> Tuple[np.ndarray, float]:
    """
    Solves the square assignment problem.

    Args:
        cost (array-like): An m x m finite cost matrix.

    Returns:
        tuple: The permutation pi (row i is matched to column pi[i]) and its total cost.

    Raises:
        InvalidArgumentError: If the matrix is not square or not finite.
    """
    cost = np.asarray(cost, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise InvalidArgumentError(f"cost matrix must be square, got shape {cost.shape}")
    if not np.all(np.isfinite(cost)):
        raise InvalidArgumentError("cost matrix must be finite")
    rows, columns = linear_sum_assignment(cost)
    permutation = np.empty(cost.shape[0], dtype=np.int64)
    permutation[rows] = columns
    return permutation, float(cost[rows, columns].sum())


def clustering_accuracy(pred, true) -> float:
    """
    Fraction of samples correctly labeled under the best one-to-one matching of predicted to true labels.
    The contingency table is zero-padded to a square when the label counts differ.

    Args:
        pred (array-like): Predicted cluster labels.
        true (array-like): Reference labels.

    Returns:
        float: Accuracy in [0, 1].

    Raises:
        InvalidArgumentError: If the labelings differ in length.
    """
    table = contingency_table(pred, true)
    if table.n == 0:
        return 0.0
    size = max(table.shape)
    padded = np.zeros((size, size), dtype=np.float64)
    padded[: table.shape[0], : table.shape[1]] = table.counts
    _, cost = hungarian(-padded)
    return float(-cost / table.n)


def nmi(pred, true) -> float:
    """
    I(pred; true) / sqrt(H(pred) H(true)) in nats, and 0 when either labeling is constant.

    Raises:
        InvalidArgumentError: If the labelings differ in length.
    """
    table = contingency_table(pred, true)
    if table.n == 0:
        return 0.0
    h_pred = entropy(table.counts.sum(axis=1))
    h_true = entropy(table.counts.sum(axis=0))
    if h_pred <= 0.0 or h_true <= 0.0:
        return 0.0
    mutual_information = mutual_info_score(None, None, contingency=table.counts)
    return float(np.clip(mutual_information / np.sqrt(h_pred * h_true), 0.0, 1.0))


def ari(pred, true) -> float:
    """Adjusted Rand index by pair counting; raises InvalidArgumentError on a length mismatch."""
    pred, true = _check_pair(pred, true)
    return float(adjusted_rand_score(true, pred))


def quantize_confound(confound: ConfoundLabels, bins: int = LEAKAGE_BINS) -> np.ndarray:
    """
    Discrete view of a confound: class labels as they are, continuous values in [0, 1] as the index of one of
    `bins` equal-width intervals.
    """
    if confound.is_discrete:
        return confound.values
    return np.minimum((confound.values * bins).astype(np.int64), bins - 1)


def confound_leakage(pred, confound: Union[ConfoundLabels, np.ndarray]) -> float:
    """
    NMI between the predicted clusters and the confound; 0 means the clusters carry no confound information.

    Args:
        pred (array-like): Predicted cluster labels.
        confound (Union[ConfoundLabels, np.ndarray]): Confound labels; continuous ones are binned first.

    Returns:
        float: Leakage in [0, 1].
    """
    if isinstance(confound, ConfoundLabels):
        confound = quantize_confound(confound)
    return nmi(pred, confound)
