from .exceptions import (
    ScabError,
    InvalidArgumentError,
    FormatError,
    TrainingDivergedError,
    MissingArtifactError,
)

__all__ = [
    "ScabError",
    "InvalidArgumentError",
    "FormatError",
    "TrainingDivergedError",
    "MissingArtifactError",
]
