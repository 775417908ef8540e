from .baselines import BASELINE_METHODS, run_baseline
from .config import ABLATIONS, TrainConfig, load_config
from .evaluation import (
    PcaProjection,
    bundles_for,
    evaluate,
    partition_scores,
    pca_project,
    plot_centroid_grid,
    plot_embeddings,
    reconstruct_centroids,
    report,
)
from .runs import EpochRecord, RunRecord, read_epochs
from .trainer import ScabTrainer, train_scab

__all__ = [
    "BASELINE_METHODS",
    "run_baseline",
    "ABLATIONS",
    "TrainConfig",
    "load_config",
    "PcaProjection",
    "bundles_for",
    "evaluate",
    "partition_scores",
    "pca_project",
    "plot_centroid_grid",
    "plot_embeddings",
    "reconstruct_centroids",
    "report",
    "EpochRecord",
    "RunRecord",
    "read_epochs",
    "ScabTrainer",
    "train_scab",
]
