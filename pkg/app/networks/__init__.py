from .model import (
    CONDITION_CONTINUOUS,
    CONDITION_DISCRETE,
    CONDITION_NONE,
    HEAD_IDENTITY,
    HEAD_SIGMOID,
    GaussianPosterior,
    ScabNetwork,
    reparameterize,
)
from .checkpoint import load_model, save_model

__all__ = [
    "CONDITION_CONTINUOUS",
    "CONDITION_DISCRETE",
    "CONDITION_NONE",
    "HEAD_IDENTITY",
    "HEAD_SIGMOID",
    "GaussianPosterior",
    "ScabNetwork",
    "reparameterize",
    "load_model",
    "save_model",
]
