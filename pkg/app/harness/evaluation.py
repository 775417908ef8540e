"""
This module scores persisted runs and renders their comparison: per-run metric tables, a CSV companion, a 2-D PCA
scatter of the final embeddings and a grid of decoded centroids under every confound value.
"""

import logging
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import matplotlib
import numpy as np
import pandas as pd
import torch
from matplotlib.figure import Figure

from app.clustering.storage import CENTROIDS_FILE, load_centroids
from app.datasets.bundle import DatasetBundle
from app.datasets.storage import load_bundle
from app.harness.config import ABLATION_NO_DIS, ABLATION_NONE
from app.harness.runs import (
    CONFIG_FILE,
    MODEL_FILE,
    SUMMARY_FILE,
    artifact_path,
    read_assignments,
    read_config,
    read_embeddings,
    read_summary,
)
from app.metrics.fairness import balance, labels_to_partition
from app.metrics.scores import ari, clustering_accuracy, confound_leakage, nmi
from app.networks.checkpoint import load_model
from app.networks.model import CONDITION_CONTINUOUS, CONDITION_DISCRETE
from app.utils.exceptions import InvalidArgumentError

SCORE_COLUMNS = ["acc", "nmi", "ari", "leakage", "balance"]
SVG_SALT = "scab"


def partition_scores(labels: np.ndarray, bundle: DatasetBundle) -> Dict[str, float]:
    """
    Scores a partition against a dataset: ACC, NMI and ARI when interest labels exist, leakage when the confound
    is fully observed, and balance when it is also discrete with every class present.

    Args:
        labels (np.ndarray): N cluster indices in [0, K).
        bundle (DatasetBundle): The dataset.

    Returns:
        dict: The available scores.
    """
    scores = {}
    if bundle.y is not None:
        scores["acc"] = clustering_accuracy(labels, bundle.y)
        scores["nmi"] = nmi(labels, bundle.y)
        scores["ari"] = ari(labels, bundle.y)
    confound = bundle.c
    if confound.fully_observed:
        scores["leakage"] = confound_leakage(labels, confound)
        if confound.is_discrete and np.all(np.bincount(confound.values, minlength=confound.g_categories) > 0):
            partition = labels_to_partition(labels, max(bundle.k_clusters, int(np.max(labels)) + 1))
            scores["balance"] = balance(partition, confound.values, confound.g_categories).overall
    return scores


def _method_of(run_dir: str) -> str:
    if os.path.exists(os.path.join(run_dir, SUMMARY_FILE)):
        return read_summary(run_dir).get("method", "unknown")
    return os.path.basename(os.path.normpath(run_dir))


def evaluate(run_dir: str, bundle: DatasetBundle) -> pd.DataFrame:
    """
    Recomputes the scores of a run from its persisted assignments.

    Args:
        run_dir (str): The run directory.
        bundle (DatasetBundle): The dataset the run was trained on.

    Returns:
        pd.DataFrame: One row indexed by the run directory.

    Raises:
        MissingArtifactError: If the run has no assignments.
        FormatError: If the assignments do not hold one label per sample.
    """
    labels = read_assignments(run_dir, bundle.n)
    row = {"run": run_dir, "method": _method_of(run_dir), **partition_scores(labels, bundle)}
    return pd.DataFrame([row]).set_index("run").reindex(columns=["method", *SCORE_COLUMNS])


def report(run_dirs: Sequence[str], csv_path: Optional[str] = None) -> pd.DataFrame:
    """
    Comparison table of several runs, from their summaries.

    Args:
        run_dirs (Sequence[str]): At least one run directory.
        csv_path (str, optional): Where to write the machine-readable companion.

    Returns:
        pd.DataFrame: One row per run, in the given order.

    Raises:
        InvalidArgumentError: If no run is given.
        MissingArtifactError: If a run has no summary.
    """
    if not run_dirs:
        raise InvalidArgumentError("report needs at least one run")
    rows = []
    for run_dir in run_dirs:
        summary = read_summary(run_dir)
        rows.append(
            {
                "run": run_dir,
                "method": summary.get("method"),
                "ablation": summary.get("ablation"),
                **summary.get("scores", {}),
                "elapsed_seconds": summary.get("elapsed_seconds"),
            }
        )
    table = pd.DataFrame(rows).set_index("run")
    table = table.reindex(columns=["method", "ablation", *SCORE_COLUMNS, "elapsed_seconds"])
    if csv_path is not None:
        table.to_csv(csv_path, float_format="%.6f")
        logging.info("Wrote report table to %s", csv_path)
    return table


@dataclass
class PcaProjection:
    """Principal axes (columns of `components`) sorted by decreasing variance, and the projected points."""

    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    projected: np.ndarray


def pca_project(Z: np.ndarray, n_components: int = 2) -> PcaProjection:
    """
    Projects onto the leading eigenvectors of the covariance (1/N normalization). Each axis is oriented so that
    its largest-magnitude coordinate is positive.

    Args:
        Z (np.ndarray): N x d points.
        n_components (int): The number of axes kept, at most d.

    Returns:
        PcaProjection: The projection.

    Raises:
        InvalidArgumentError: If n_components is outside [1, d].
    """
    Z = np.asarray(Z, dtype=np.float64)
    if not 1 <= n_components <= Z.shape[1]:
        raise InvalidArgumentError(f"n_components must lie in [1, {Z.shape[1]}]")
    mean = Z.mean(axis=0)
    centered = Z - mean
    covariance = centered.T @ centered / Z.shape[0]
    eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    order = np.argsort(eigenvalues, kind="stable")[::-1]
    eigenvalues, eigenvectors = eigenvalues[order], eigenvectors[:, order]
    signs = np.sign(eigenvectors[np.argmax(np.abs(eigenvectors), axis=0), np.arange(eigenvectors.shape[1])])
    eigenvectors = eigenvectors * np.where(signs == 0, 1.0, signs)
    components = eigenvectors[:, :n_components]
    return PcaProjection(
        mean=mean,
        components=components,
        eigenvalues=eigenvalues,
        projected=centered @ components,
    )


def _save_svg(figure, path: str) -> None:
    with matplotlib.rc_context({"svg.hashsalt": SVG_SALT}):
        figure.savefig(path, format="svg", metadata={"Date": None})
    logging.info("Wrote %s", path)


def _plane(Z: np.ndarray) -> np.ndarray:
    projection = pca_project(Z, min(2, Z.shape[1])).projected
    if projection.shape[1] == 1:
        projection = np.hstack([projection, np.zeros_like(projection)])
    return projection


def plot_embeddings(
    run_dirs: Sequence[str], path: str, bundles: Optional[List[Optional[DatasetBundle]]] = None
) -> None:
    """
    Writes an SVG with one row per run: the PCA plane of its final embeddings colored by cluster and, when the
    dataset is available, by confound.

    Args:
        run_dirs (Sequence[str]): The runs.
        path (str): The SVG file.
        bundles (list, optional): The dataset of each run, or None entries where unavailable.
    """
    bundles = bundles or [None] * len(run_dirs)
    figure = Figure(figsize=(8, 4 * len(run_dirs)))
    axes = figure.subplots(len(run_dirs), 2, squeeze=False)
    for row, (run_dir, bundle) in enumerate(zip(run_dirs, bundles)):
        plane = _plane(read_embeddings(run_dir))
        labels = read_assignments(run_dir, plane.shape[0])
        by_cluster, by_confound = axes[row]
        by_cluster.scatter(plane[:, 0], plane[:, 1], c=labels, cmap="tab10", s=4)
        by_cluster.set_title(f"{_method_of(run_dir)}: clusters")
        if bundle is not None:
            by_confound.scatter(plane[:, 0], plane[:, 1], c=bundle.c.values, cmap="viridis", s=4)
            by_confound.set_title(f"{_method_of(run_dir)}: confound")
        else:
            by_confound.axis("off")
    figure.tight_layout()
    _save_svg(figure, path)


def bundles_for(run_dirs: Sequence[str], data_dir: Optional[str] = None) -> List[Optional[DatasetBundle]]:
    """The dataset of every run: `data_dir` when given, else the directory recorded in the run's summary."""
    bundles = []
    for run_dir in run_dirs:
        directory = data_dir or read_summary(run_dir).get("data_dir")
        bundles.append(load_bundle(directory) if directory else None)
    return bundles


def reconstruct_centroids(run_dir: str, n_continuous: int = 5) -> np.ndarray:
    """
    Decodes every centroid under every confound value: each class of a discrete confound, `n_continuous` evenly
    spaced values of a continuous one, or no conditioning at all. Centroids pass through the fusion layer as
    h(e_k, e_k) when the run trained with it.

    Args:
        run_dir (str): A trained run directory.
        n_continuous (int): The number of continuous confound values.

    Returns:
        np.ndarray: A K x G x D array of reconstructions.

    Raises:
        MissingArtifactError: If the run has no checkpoint or centroids.
    """
    network = load_model(artifact_path(run_dir, MODEL_FILE))
    centroids = torch.from_numpy(load_centroids(artifact_path(run_dir, CENTROIDS_FILE)))
    config = read_config(run_dir) if os.path.exists(os.path.join(run_dir, CONFIG_FILE)) else {}
    fused = config.get("ablation", ABLATION_NONE) in (ABLATION_NONE, ABLATION_NO_DIS)

    if network.condition_kind == CONDITION_DISCRETE:
        values = [torch.full((centroids.shape[0],), g, dtype=torch.long) for g in range(network.g_categories)]
    elif network.condition_kind == CONDITION_CONTINUOUS:
        values = [torch.full((centroids.shape[0],), v, dtype=torch.float32) for v in np.linspace(0.0, 1.0, n_continuous)]
    else:
        values = [None]

    network.eval()
    with torch.no_grad():
        z_hat = network.fuse(centroids, centroids) if fused else centroids
        decoded = [network.decode(z_hat, c).numpy() for c in values]
    return np.stack(decoded, axis=1)


def plot_centroid_grid(grid: np.ndarray, path: str) -> None:
    """
    Writes a K x G SVG grid of decoded centroids: images when D is a perfect square, feature profiles otherwise.

    Args:
        grid (np.ndarray): A K x G x D array.
        path (str): The SVG file.
    """
    n_clusters, n_values, d_input = grid.shape
    side = math.isqrt(d_input)
    figure = Figure(figsize=(1.5 * n_values, 1.5 * n_clusters))
    axes = figure.subplots(n_clusters, n_values, squeeze=False)
    for k in range(n_clusters):
        for g in range(n_values):
            axis = axes[k][g]
            if side * side == d_input:
                axis.imshow(grid[k, g].reshape(side, side), cmap="gray", vmin=0.0, vmax=max(1.0, grid.max()))
            else:
                axis.plot(grid[k, g], linewidth=0.8)
            axis.set_xticks([])
            axis.set_yticks([])
    figure.tight_layout()
    _save_svg(figure, path)
