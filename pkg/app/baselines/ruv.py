"""
The module removes unwanted variation linearly: the confound effect is regressed from the data with the one-hot
confound design C, and the fitted part C beta is subtracted, leaving every confound class with zero mean.
"""

from dataclasses import dataclass

import numpy as np

from app.utils.exceptions import InvalidArgumentError


@dataclass(frozen=True)
class ConfoundEffect:
    """Per-category effect centroids beta, one row per confound class."""

    beta: np.ndarray

    @property
    def g_categories(self) -> int:
        return self.beta.shape[0]


def estimate_confound_effect(X: np.ndarray, C: np.ndarray) -> ConfoundEffect:
    """
    Least-squares estimate beta = (C^T C)^{-1} C^T X, which for a one-hot C is the matrix of per-class means.

    Args:
        X (np.ndarray): N x D data.
        C (np.ndarray): N x G one-hot confound design.

    Returns:
        ConfoundEffect: The G x D effect matrix.

    Raises:
        InvalidArgumentError: If the shapes disagree or a confound class has no samples.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or X.ndim != 2 or C.shape[0] != X.shape[0]:
        raise InvalidArgumentError("X and C must be matrices with one row per sample")
    counts = C.sum(axis=0)
    if np.any(counts == 0):
        empty = np.flatnonzero(counts == 0).tolist()
        raise InvalidArgumentError(f"confound classes {empty} have no samples")
    beta = np.linalg.solve(C.T @ C, C.T @ X)
    return ConfoundEffect(beta=beta)


def ruv_purify(X: np.ndarray, C: np.ndarray, effect: ConfoundEffect) -> np.ndarray:
    """
    Purified data X - C beta.

    Args:
        X (np.ndarray): N x D data.
        C (np.ndarray): N x G one-hot confound design.
        effect (ConfoundEffect): The estimated effect.

    Returns:
        np.ndarray: The N x D purified data, float64.

    Raises:
        InvalidArgumentError: If the shapes are inconsistent.
    """
    X = np.asarray(X, dtype=np.float64)
    C = np.asarray(C, dtype=np.float64)
    if C.shape != (X.shape[0], effect.g_categories) or effect.beta.shape[1] != X.shape[1]:
        raise InvalidArgumentError("X, C and beta have inconsistent shapes")
    return X - C @ effect.beta
