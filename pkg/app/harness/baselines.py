"""
This module runs the comparison methods and persists them like a trained run:

    kmeans   k-means on the raw features
    ruv_x    k-means on features with the confound effect removed
    ruv_z    a plain autoencoder, then k-means on embeddings with the confound effect removed
"""

import logging
import time
from dataclasses import replace
from typing import Optional

import numpy as np

from app.baselines.kmeans import kmeans
from app.baselines.ruv import estimate_confound_effect, ruv_purify
from app.datasets.bundle import DatasetBundle
from app.harness.config import ABLATION_NO_DIS_NO_CLU, TrainConfig
from app.harness.evaluation import partition_scores
from app.harness.runs import (
    EpochRecord,
    RunRecord,
    log_epoch,
    prepare_run_dir,
    write_config,
    write_partition,
    write_summary,
)
from app.harness.trainer import ScabTrainer
from app.utils.exceptions import InvalidArgumentError

KMEANS = "kmeans"
RUV_X = "ruv_x"
RUV_Z = "ruv_z"
BASELINE_METHODS = (KMEANS, RUV_X, RUV_Z)


def _purifier(bundle: DatasetBundle):
    C = bundle.c.one_hot()

    def purify(Z: np.ndarray) -> np.ndarray:
        return ruv_purify(Z, C, estimate_confound_effect(Z, C))

    return purify


def _cluster_features(
    method: str,
    features: np.ndarray,
    bundle: DatasetBundle,
    config: TrainConfig,
    run_dir: str,
    data_dir: Optional[str],
) -> RunRecord:
    started = time.perf_counter()
    prepare_run_dir(run_dir)
    write_config(run_dir, config.to_dict())
    result = kmeans(
        features,
        bundle.k_clusters,
        max_iters=config.kmeans_max_iters,
        n_init=config.kmeans_n_init,
        seed=config.seed,
        n_jobs=config.n_jobs,
    )
    scores = partition_scores(result.labels, bundle)
    epoch = EpochRecord(epoch=0, inertia=result.inertia, **scores)
    log_epoch(run_dir, epoch)
    write_partition(run_dir, result.labels, result.centroids, features)
    record = RunRecord(
        run_dir=run_dir,
        method=method,
        ablation=config.ablation,
        epochs=[epoch],
        labels=result.labels,
        centroids=result.centroids,
        embeddings=features,
        scores=scores,
        elapsed_seconds=time.perf_counter() - started,
    )
    write_summary(
        run_dir,
        {
            "method": method,
            "ablation": config.ablation,
            "data_dir": data_dir,
            "scores": scores,
            "elapsed_seconds": record.elapsed_seconds,
        },
    )
    logging.info("Baseline %s finished: %s", method, scores)
    return record


def run_baseline(
    method: str, bundle: DatasetBundle, config: TrainConfig, run_dir: str, data_dir: Optional[str] = None
) -> RunRecord:
    """
    Runs one comparison method and writes its run directory.

    Args:
        method (str): 'kmeans', 'ruv_x' or 'ruv_z'.
        bundle (DatasetBundle): The dataset; the RUV methods need a fully observed discrete confound.
        config (TrainConfig): Seed and k-means settings for every method, training settings for 'ruv_z'.
        run_dir (str): The run directory.
        data_dir (str, optional): The dataset directory, recorded for later reports.

    Returns:
        RunRecord: The run.

    Raises:
        InvalidArgumentError: On an unknown method, or an RUV method on a continuous or partially observed confound.
    """
    if method not in BASELINE_METHODS:
        raise InvalidArgumentError(f"unknown baseline '{method}'; expected one of {BASELINE_METHODS}")
    config.validate()
    if method == KMEANS:
        return _cluster_features(method, bundle.X.astype(np.float64), bundle, config, run_dir, data_dir)

    if not bundle.c.is_discrete:
        raise InvalidArgumentError("RUV baselines cannot be applied to a continuous confound")
    if not bundle.c.fully_observed:
        raise InvalidArgumentError("RUV baselines need fully observed confound labels")
    if method == RUV_X:
        purified = _purifier(bundle)(bundle.X.astype(np.float64))
        return _cluster_features(method, purified, bundle, config, run_dir, data_dir)

    plain = replace(config, ablation=ABLATION_NO_DIS_NO_CLU)
    trainer = ScabTrainer(
        bundle, plain, run_dir, method=method, data_dir=data_dir, embedding_transform=_purifier(bundle)
    )
    return trainer.train()
