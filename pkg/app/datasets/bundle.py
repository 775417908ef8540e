"""
This module contains the dataset data model: the feature matrix, the ground-truth interest labels used only for
evaluation, and the labels of the confounding factor the clustering must be made independent of.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional

import numpy as np

from app.utils.exceptions import InvalidArgumentError

DISCRETE = "discrete"
CONTINUOUS = "continuous"
CONFOUND_KINDS = (DISCRETE, CONTINUOUS)


@dataclass(frozen=True)
class ConfoundLabels:
    """
    Per-sample labels of the confounding factor.

    Discrete labels are class indices in [0, G); continuous labels are scalars in [0, 1]. The optional mask marks
    which entries are observed (True) in the semi-supervised setting.
    """

    kind: str
    values: np.ndarray
    g_categories: Optional[int] = None
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in CONFOUND_KINDS:
            raise InvalidArgumentError(f"unknown confound kind '{self.kind}'")
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise InvalidArgumentError("confound labels must be a vector")
        if self.kind == DISCRETE:
            if self.g_categories is None or self.g_categories < 1:
                raise InvalidArgumentError("discrete confound needs g_categories >= 1")
            values = values.astype(np.int64)
            if values.size and (values.min() < 0 or values.max() >= self.g_categories):
                raise InvalidArgumentError(
                    f"discrete confound labels must lie in [0, {self.g_categories})"
                )
        else:
            if self.g_categories is not None:
                raise InvalidArgumentError("continuous confound has no g_categories")
            values = values.astype(np.float32)
            if not np.all(np.isfinite(values)) or (
                values.size and (values.min() < 0.0 or values.max() > 1.0)
            ):
                raise InvalidArgumentError("continuous confound labels must lie in [0, 1]")
        object.__setattr__(self, "values", values)
        if self.mask is not None:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise InvalidArgumentError("confound mask must match the label vector")
            if not mask.any():
                raise InvalidArgumentError("confound mask must observe at least one sample")
            object.__setattr__(self, "mask", mask)

    @property
    def is_discrete(self) -> bool:
        return self.kind == DISCRETE

    @property
    def fully_observed(self) -> bool:
        return self.mask is None or bool(self.mask.all())

    def one_hot(self) -> np.ndarray:
        """
        Expands discrete labels into the N x G indicator matrix C.

        Returns:
            np.ndarray: A float64 matrix with exactly one 1 per row.

        Raises:
            InvalidArgumentError: If the confound is continuous.
        """
        if not self.is_discrete:
            raise InvalidArgumentError("one-hot expansion needs a discrete confound")
        return np.eye(self.g_categories, dtype=np.float64)[self.values]

    def equals(self, other: "ConfoundLabels") -> bool:
        if not isinstance(other, ConfoundLabels):
            return False
        if (self.kind, self.g_categories) != (other.kind, other.g_categories):
            return False
        if self.values.dtype != other.values.dtype or not np.array_equal(
            self.values, other.values
        ):
            return False
        if (self.mask is None) != (other.mask is None):
            return False
        return self.mask is None or np.array_equal(self.mask, other.mask)


@dataclass(frozen=True)
class BundleMeta:
    """Shape and provenance information stored alongside a dataset."""

    n: int
    d_input: int
    k_clusters: int
    confound_kind: str
    g_categories: Optional[int]
    provenance: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetBundle:
    """
    A dataset X in R^{N x D}, optional interest labels y in [0, K) and confound labels c.

    X is held as float32, which is also its on-disk representation, so persistence round-trips are bit-exact.
    """

    X: np.ndarray
    c: ConfoundLabels
    k_clusters: int
    y: Optional[np.ndarray] = None
    provenance: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X)
        if X.ndim != 2 or X.shape[1] < 1:
            raise InvalidArgumentError("X must be an N x D matrix with D >= 1")
        X = np.ascontiguousarray(X, dtype=np.float32)
        if not np.all(np.isfinite(X)):
            raise InvalidArgumentError("X contains non-finite values")
        n = X.shape[0]
        if self.k_clusters < 1 or n < self.k_clusters:
            raise InvalidArgumentError(
                f"need N >= K >= 1, got N={n}, K={self.k_clusters}"
            )
        if self.c.values.shape[0] != n:
            raise InvalidArgumentError("confound labels must have one entry per sample")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y).astype(np.int64)
            if y.shape != (n,):
                raise InvalidArgumentError("y must have one entry per sample")
            if y.min() < 0 or y.max() >= self.k_clusters:
                raise InvalidArgumentError(f"y must lie in [0, {self.k_clusters})")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d_input(self) -> int:
        return self.X.shape[1]

    @property
    def meta(self) -> BundleMeta:
        return BundleMeta(
            n=self.n,
            d_input=self.d_input,
            k_clusters=self.k_clusters,
            confound_kind=self.c.kind,
            g_categories=self.c.g_categories,
            provenance=dict(self.provenance),
        )

    @property
    def unit_interval(self) -> bool:
        """Whether every feature lies in [0, 1] (image-like data)."""
        return bool(self.X.min() >= 0.0 and self.X.max() <= 1.0)

    def with_confound(self, c: ConfoundLabels, **provenance) -> "DatasetBundle":
        """
        Returns a copy carrying new confound labels.

        Args:
            c (ConfoundLabels): The replacement labels.
            **provenance: Entries merged into the provenance record.

        Returns:
            DatasetBundle: The new bundle; X and y are shared, not copied.
        """
        merged = dict(self.provenance)
        merged.update(provenance)
        return replace(self, c=c, provenance=merged)

    def equals(self, other: "DatasetBundle") -> bool:
        """
        Field-by-field, bit-exact comparison.

        Args:
            other (DatasetBundle): The bundle to compare against.

        Returns:
            bool: True when every field matches exactly.
        """
        if not isinstance(other, DatasetBundle):
            return False
        if self.k_clusters != other.k_clusters or self.provenance != other.provenance:
            return False
        if self.X.shape != other.X.shape or self.X.tobytes() != other.X.tobytes():
            return False
        if (self.y is None) != (other.y is None):
            return False
        if self.y is not None and not np.array_equal(self.y, other.y):
            return False
        return self.c.equals(other.c)
