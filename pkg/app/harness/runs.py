"""
This module contains the run record types and the layout of a run directory:

    config.json       the resolved TrainConfig
    metrics.jsonl     one record per logged epoch
    model.bin         network checkpoint (trained methods only)
    centroids.bin     K x d centroids of the final partition
    assignments.bin   N u32le cluster indices
    embeddings.bin    N x d embedding the partition was computed in
    summary.json      method, ablation, data directory, final scores, elapsed seconds
"""

import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from app.clustering.storage import (
    ASSIGNMENTS_FILE,
    CENTROIDS_FILE,
    load_assignments,
    save_assignments,
    save_centroids,
)
from app.utils.exceptions import MissingArtifactError
from app.utils.helper import append_jsonl, read_json, read_jsonl, read_matrix, write_json, write_matrix

CONFIG_FILE = "config.json"
METRICS_FILE = "metrics.jsonl"
MODEL_FILE = "model.bin"
EMBEDDINGS_FILE = "embeddings.bin"
SUMMARY_FILE = "summary.json"

RUN_ARTIFACTS = (CONFIG_FILE, METRICS_FILE, MODEL_FILE, CENTROIDS_FILE, ASSIGNMENTS_FILE, EMBEDDINGS_FILE, SUMMARY_FILE)


@dataclass
class EpochRecord:
    """Loss breakdown (epoch means over minibatches) and partition scores of one logged epoch."""

    epoch: int
    recon: Optional[float] = None
    kl_prior: Optional[float] = None
    pairwise_kl: Optional[float] = None
    cluster: Optional[float] = None
    total: Optional[float] = None
    acc: Optional[float] = None
    nmi: Optional[float] = None
    ari: Optional[float] = None
    leakage: Optional[float] = None
    balance: Optional[float] = None
    mi_lower_bound: Optional[float] = None
    inertia: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {key: value for key, value in asdict(self).items() if value is not None}

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "EpochRecord":
        return cls(**{key: value for key, value in record.items() if key in cls.__dataclass_fields__})


@dataclass
class RunRecord:
    """Everything a run produced; `labels` is None when no partition was computed (zero epochs)."""

    run_dir: str
    method: str
    ablation: str
    epochs: List[EpochRecord] = field(default_factory=list)
    labels: Optional[np.ndarray] = None
    centroids: Optional[np.ndarray] = None
    embeddings: Optional[np.ndarray] = None
    scores: Dict[str, float] = field(default_factory=dict)
    elapsed_seconds: float = 0.0

    @property
    def partition(self) -> List[np.ndarray]:
        if self.labels is None:
            return []
        return [np.flatnonzero(self.labels == k) for k in range(self.centroids.shape[0])]


def prepare_run_dir(run_dir: str) -> None:
    """
    Creates the run directory and removes artifacts of an earlier run in it.

    Args:
        run_dir (str): The run directory.
    """
    os.makedirs(run_dir, exist_ok=True)
    for name in RUN_ARTIFACTS:
        path = os.path.join(run_dir, name)
        if os.path.exists(path):
            logging.debug("Removing stale artifact %s", path)
            os.remove(path)
    open(os.path.join(run_dir, METRICS_FILE), "w", encoding="utf-8").close()


def artifact_path(run_dir: str, name: str) -> str:
    """
    Path of a required artifact.

    Raises:
        MissingArtifactError: If the file does not exist.
    """
    path = os.path.join(run_dir, name)
    if not os.path.exists(path):
        raise MissingArtifactError(f"run directory {run_dir} has no {name}")
    return path


def write_config(run_dir: str, config: Dict[str, Any]) -> None:
    write_json(os.path.join(run_dir, CONFIG_FILE), config)


def read_config(run_dir: str) -> Dict[str, Any]:
    return read_json(artifact_path(run_dir, CONFIG_FILE))


def log_epoch(run_dir: str, record: EpochRecord) -> None:
    append_jsonl(os.path.join(run_dir, METRICS_FILE), record.to_dict())


def read_epochs(run_dir: str) -> List[EpochRecord]:
    return [EpochRecord.from_dict(r) for r in read_jsonl(artifact_path(run_dir, METRICS_FILE))]


def write_partition(run_dir: str, labels: np.ndarray, centroids: np.ndarray, embeddings: np.ndarray) -> None:
    """
    Persists the final partition with the centroids and embedding it was computed from.

    Args:
        run_dir (str): The run directory.
        labels (np.ndarray): N cluster indices.
        centroids (np.ndarray): K x d centroids.
        embeddings (np.ndarray): N x d embedding.
    """
    save_assignments(labels, os.path.join(run_dir, ASSIGNMENTS_FILE))
    save_centroids(centroids, os.path.join(run_dir, CENTROIDS_FILE))
    write_matrix(os.path.join(run_dir, EMBEDDINGS_FILE), embeddings)


def read_assignments(run_dir: str, n: Optional[int] = None) -> np.ndarray:
    return load_assignments(artifact_path(run_dir, ASSIGNMENTS_FILE), n)


def read_embeddings(run_dir: str) -> np.ndarray:
    return read_matrix(artifact_path(run_dir, EMBEDDINGS_FILE))


def write_summary(run_dir: str, summary: Dict[str, Any]) -> None:
    write_json(os.path.join(run_dir, SUMMARY_FILE), summary)


def read_summary(run_dir: str) -> Dict[str, Any]:
    return read_json(artifact_path(run_dir, SUMMARY_FILE))
