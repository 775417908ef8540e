"""The module hides confound labels to simulate the semi-supervised setting."""

import logging
import math

import numpy as np

from app.datasets.bundle import ConfoundLabels, DatasetBundle
from app.utils.exceptions import InvalidArgumentError


def mask_confound_labels(bundle: DatasetBundle, labeled_ratio: float, seed: int) -> DatasetBundle:
    """
    Marks ceil(labeled_ratio * N) confound labels as observed and the rest as unobserved.

    When at least G labels are kept, one observed sample per confound class is drawn first and the remainder is
    drawn uniformly from the other samples, so every class stays represented. The stored label values are kept.

    Args:
        bundle (DatasetBundle): A bundle with fully observed discrete confound labels.
        labeled_ratio (float): The observed fraction, in (0, 1].
        seed (int): Seed of the random stream.

    Returns:
        DatasetBundle: A copy carrying the mask.

    Raises:
        InvalidArgumentError: If the ratio is out of range or the confound is not fully observed and discrete.
    """
    if not 0.0 < labeled_ratio <= 1.0:
        raise InvalidArgumentError("labeled_ratio must lie in (0, 1]")
    if not bundle.c.is_discrete:
        raise InvalidArgumentError("only discrete confound labels can be masked")
    if not bundle.c.fully_observed:
        raise InvalidArgumentError("confound labels are already partially masked")

    n = bundle.n
    n_observed = min(n, max(1, math.ceil(labeled_ratio * n - 1e-9)))
    values = bundle.c.values
    rng = np.random.default_rng(seed)

    mask = np.zeros(n, dtype=bool)
    present = np.unique(values)
    if n_observed >= present.size:
        for g in present:
            mask[rng.choice(np.flatnonzero(values == g))] = True
    remaining = n_observed - int(mask.sum())
    if remaining > 0:
        mask[rng.choice(np.flatnonzero(~mask), size=remaining, replace=False)] = True

    logging.info("Masked confound labels: %d of %d observed", n_observed, n)
    return bundle.with_confound(
        ConfoundLabels(bundle.c.kind, values, g_categories=bundle.c.g_categories, mask=mask)
    )
