from .kmeans import KMeansResult, kmeans
from .propagation import PropagationResult, propagate_confound_labels
from .ruv import ConfoundEffect, estimate_confound_effect, ruv_purify

__all__ = [
    "KMeansResult",
    "kmeans",
    "PropagationResult",
    "propagate_confound_labels",
    "ConfoundEffect",
    "estimate_confound_effect",
    "ruv_purify",
]
