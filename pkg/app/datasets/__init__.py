from .bundle import CONTINUOUS, DISCRETE, BundleMeta, ConfoundLabels, DatasetBundle
from .generators import generate_rotated_glyphs, generate_two_factor_gaussians
from .masking import mask_confound_labels
from .storage import load_bundle, save_bundle

__all__ = [
    "CONTINUOUS",
    "DISCRETE",
    "BundleMeta",
    "ConfoundLabels",
    "DatasetBundle",
    "generate_rotated_glyphs",
    "generate_two_factor_gaussians",
    "mask_confound_labels",
    "load_bundle",
    "save_bundle",
]
