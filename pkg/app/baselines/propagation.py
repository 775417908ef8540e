"""
The module fills in unobserved confound labels: a multinomial logistic-regression classifier is trained on the
observed (x, c) pairs and predicts the confound of every unobserved sample.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from app.datasets.bundle import ConfoundLabels, DatasetBundle
from app.utils.exceptions import InvalidArgumentError

VALIDATION_FRACTION = 0.1


@dataclass
class PropagationResult:
    """
    The fully labeled bundle with the classifier accuracies: on a held-out share of the observed labels, and on
    the unobserved rows against the values stored there (meaningful when those are ground truth).
    """

    bundle: DatasetBundle
    validation_accuracy: Optional[float]
    unlabeled_accuracy: Optional[float]


def _validation_split(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Positions (into `labels`) held out for validation; every class keeps at least one training sample."""
    order = rng.permutation(labels.size)
    _, first = np.unique(labels[order], return_index=True)
    candidates = np.delete(order, first)
    n_validation = min(int(VALIDATION_FRACTION * labels.size), candidates.size)
    return candidates[:n_validation]


def propagate_confound_labels(bundle: DatasetBundle, seed: int, max_iter: int = 500) -> PropagationResult:
    """
    Predicts the unobserved discrete confound labels of a masked bundle.

    Args:
        bundle (DatasetBundle): A bundle whose discrete confound carries a mask.
        seed (int): Seed of the validation split and the classifier.
        max_iter (int): The classifier's iteration budget.

    Returns:
        PropagationResult: A bundle without mask whose unobserved labels were replaced by predictions.

    Raises:
        InvalidArgumentError: If the confound is continuous, unmasked, or a class has no observed label.
    """
    confound = bundle.c
    if not confound.is_discrete:
        raise InvalidArgumentError("label propagation needs a discrete confound")
    if confound.mask is None:
        raise InvalidArgumentError("bundle has no confound mask to propagate")
    observed = confound.mask
    counts = np.bincount(confound.values[observed], minlength=confound.g_categories)
    if np.any(counts == 0):
        missing = np.flatnonzero(counts == 0).tolist()
        raise InvalidArgumentError(f"confound classes {missing} have no observed labels")

    full = ConfoundLabels(confound.kind, confound.values, g_categories=confound.g_categories)
    if observed.all():
        return PropagationResult(bundle=bundle.with_confound(full), validation_accuracy=None, unlabeled_accuracy=None)

    rng = np.random.default_rng(seed)
    labeled = np.flatnonzero(observed)
    validation = labeled[_validation_split(confound.values[labeled], rng)]
    training = np.setdiff1d(labeled, validation)

    if confound.g_categories == 1:
        classifier = None
    else:
        classifier = make_pipeline(
            StandardScaler(),
            LogisticRegression(max_iter=max_iter, random_state=seed),
        )
        classifier.fit(bundle.X[training], confound.values[training])

    def predict(rows: np.ndarray) -> np.ndarray:
        if classifier is None:
            return np.zeros(rows.size, dtype=np.int64)
        return classifier.predict(bundle.X[rows]).astype(np.int64)

    validation_accuracy = None
    if validation.size:
        validation_accuracy = float(np.mean(predict(validation) == confound.values[validation]))
    unlabeled = np.flatnonzero(~observed)
    predictions = predict(unlabeled)
    unlabeled_accuracy = float(np.mean(predictions == confound.values[unlabeled]))

    values = confound.values.copy()
    values[unlabeled] = predictions
    logging.info(
        "Propagated %d confound labels from %d observed (validation acc %s, unlabeled acc %.4f)",
        unlabeled.size,
        labeled.size,
        "n/a" if validation_accuracy is None else f"{validation_accuracy:.4f}",
        unlabeled_accuracy,
    )
    propagated = bundle.with_confound(
        ConfoundLabels(confound.kind, values, g_categories=confound.g_categories),
        propagation={
            "n_labeled": int(labeled.size),
            "labeled_ratio": float(labeled.size / bundle.n),
            "validation_accuracy": validation_accuracy,
            "unlabeled_accuracy": unlabeled_accuracy,
        },
    )
    return PropagationResult(
        bundle=propagated,
        validation_accuracy=validation_accuracy,
        unlabeled_accuracy=unlabeled_accuracy,
    )
