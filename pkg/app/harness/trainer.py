"""
This module provides the `ScabTrainer` class, which trains the confound-aware clustering model on a dataset bundle:
minibatch gradient steps on the network parameters with the centroids frozen, alternated with moving-average
updates of the centroids, followed by extraction and persistence of the final partition.
"""

import logging
import os
import time
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import torch

from app.baselines.kmeans import kmeans
from app.clustering.centroid_bank import CentroidBank, ema_update, init_centroids, partition_labels, soft_assign
from app.datasets.bundle import DatasetBundle
from app.harness.config import TrainConfig
from app.harness.evaluation import partition_scores
from app.harness.runs import (
    MODEL_FILE,
    EpochRecord,
    RunRecord,
    log_epoch,
    prepare_run_dir,
    write_config,
    write_partition,
    write_summary,
)
from app.networks.checkpoint import save_model
from app.networks.model import CONDITION_NONE, HEAD_IDENTITY, HEAD_SIGMOID, ScabNetwork
from app.objective.losses import (
    RECON_BERNOULLI,
    LossBreakdown,
    cluster_loss,
    cluster_mi_lower_bound,
    mi_pairwise_term,
    total_loss,
    vae_loss,
)
from app.utils.exceptions import InvalidArgumentError, TrainingDivergedError
from app.utils.helper import derive_seed

# Child-seed keys of the independent random streams of a run.
INIT_STREAM, SHUFFLE_STREAM, NOISE_STREAM, CENTROID_STREAM, KMEANS_STREAM = range(5)

LOSS_TERMS = ("recon", "kl_prior", "pairwise_kl", "cluster", "total")


class ScabTrainer:
    """
    Class to train the model on one dataset and persist the run.
    """

    def __init__(
        self,
        bundle: DatasetBundle,
        config: TrainConfig,
        run_dir: str,
        method: str = "scab",
        data_dir: Optional[str] = None,
        embedding_transform: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        """
        Initialize the trainer.

        Args:
            bundle (DatasetBundle): The training data; its confound must be fully observed.
            config (TrainConfig): The run configuration.
            run_dir (str): The run directory to write.
            method (str): The method name recorded in the summary.
            data_dir (str, optional): The dataset directory recorded in the summary.
            embedding_transform (Callable, optional): Applied to full-data embeddings before partitioning.
        """
        config.validate()
        if bundle.n < 2:
            raise InvalidArgumentError("training needs at least 2 samples")
        if config.batch_size < 2:
            raise InvalidArgumentError("batch_size must be at least 2")
        if not bundle.c.fully_observed:
            raise InvalidArgumentError(
                "confound labels are partially observed; run label propagation first"
            )
        self.bundle = bundle
        self.config = config
        self.run_dir = run_dir
        self.method = method
        self.data_dir = data_dir
        self.embedding_transform = embedding_transform

        self.recon_kind = config.resolve_recon_kind(bundle.unit_interval)
        if self.recon_kind == RECON_BERNOULLI and not bundle.unit_interval:
            raise InvalidArgumentError("bernoulli reconstruction needs features in [0, 1]")
        self.eta1 = config.effective_eta1
        self.eta2 = config.effective_eta2
        self.conditional = config.disentangle

        self.X = torch.from_numpy(bundle.X)
        values = torch.from_numpy(bundle.c.values)
        self.c = values.long() if bundle.c.is_discrete else values.float()

        self.network = ScabNetwork(
            d_input=bundle.d_input,
            latent_dim=config.latent_dim,
            hidden_dims=config.hidden_dims,
            condition_kind=bundle.c.kind if self.conditional else CONDITION_NONE,
            g_categories=bundle.c.g_categories,
            output_head=HEAD_SIGMOID if self.recon_kind == RECON_BERNOULLI else HEAD_IDENTITY,
            seed=derive_seed(config.seed, INIT_STREAM),
        )
        self.optimizer = torch.optim.Adam(
            self.network.parameters(),
            lr=config.learning_rate,
            betas=(config.adam_beta1, config.adam_beta2),
            eps=config.adam_eps,
        )
        self.shuffle_generator = torch.Generator().manual_seed(derive_seed(config.seed, SHUFFLE_STREAM))
        self.noise_generator = torch.Generator().manual_seed(derive_seed(config.seed, NOISE_STREAM))
        self.bank: Optional[CentroidBank] = None
        self.record = RunRecord(run_dir=run_dir, method=method, ablation=config.ablation)

    def embed(self) -> np.ndarray:
        """Posterior means of the whole dataset, passed through the embedding transform if one is set."""
        self.network.eval()
        Z = self.network.embed(self.X).numpy().astype(np.float64)
        self.network.train()
        if self.embedding_transform is not None:
            Z = self.embedding_transform(Z)
        return Z

    def initialize_centroids(self, Z: np.ndarray) -> None:
        self.bank = init_centroids(
            Z,
            self.bundle.k_clusters,
            seed=derive_seed(self.config.seed, CENTROID_STREAM),
            gamma=self.config.gamma,
            tau=self.config.tau,
            lloyd_iters=self.config.init_lloyd_iters,
            n_init=self.config.kmeans_n_init,
        )

    def partition(self, Z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Cluster labels and centroids of an embedding: nearest bank centroid when the clustering head is active,
        otherwise a post-hoc k-means fit.

        Args:
            Z (np.ndarray): N x d embedding.

        Returns:
            tuple: N labels and K x d centroids.
        """
        if self.bank is not None:
            return partition_labels(Z, self.bank), self.bank.e.numpy()
        result = kmeans(
            Z,
            self.bundle.k_clusters,
            max_iters=self.config.kmeans_max_iters,
            n_init=self.config.kmeans_n_init,
            seed=derive_seed(self.config.seed, KMEANS_STREAM),
            n_jobs=self.config.n_jobs,
        )
        return result.labels, result.centroids

    def step(self, x: torch.Tensor, c: Optional[torch.Tensor]) -> LossBreakdown:
        """
        One coordinate-descent step on a minibatch: a gradient step on the network with the centroids held fixed,
        then the moving-average centroid update.

        Args:
            x (torch.Tensor): A B x D minibatch, B >= 2.
            c (Optional[torch.Tensor]): Its confound values, or None for an unconditional decoder.

        Returns:
            LossBreakdown: The batch loss terms, before the update.
        """
        noise = torch.randn(x.shape[0], self.config.latent_dim, generator=self.noise_generator)
        bank = self.bank
        terms = vae_loss(
            self.network,
            x,
            c,
            noise,
            self.recon_kind,
            centroid_lookup=bank.centroids_for if bank is not None else None,
            fuse=self.config.cluster,
        )
        pairwise = mi_pairwise_term(terms.posterior)
        assignment = None
        if bank is not None:
            assignment = soft_assign(terms.z.detach(), bank)
            clustering = cluster_loss(terms.z, assignment.s, bank.e)
        else:
            clustering = torch.zeros((), dtype=terms.recon.dtype)
        breakdown = total_loss(terms.recon, terms.kl_prior, pairwise, clustering, self.eta1, self.eta2)
        if breakdown.first_non_finite() is None:
            self.optimizer.zero_grad()
            breakdown.total.backward()
            self.optimizer.step()
            if assignment is not None:
                self.bank = ema_update(bank, terms.z.detach(), assignment.s)
        return breakdown

    def run_epoch(self, epoch: int) -> Dict[str, float]:
        """
        One shuffled pass over the data; a trailing minibatch of a single sample is dropped.

        Args:
            epoch (int): The 1-based epoch number, used in diagnostics.

        Returns:
            dict: Means of the loss terms over the minibatches.

        Raises:
            TrainingDivergedError: If a loss term becomes non-finite.
        """
        order = torch.randperm(self.bundle.n, generator=self.shuffle_generator)
        sums = dict.fromkeys(LOSS_TERMS, 0.0)
        batches = 0
        for start in range(0, self.bundle.n, self.config.batch_size):
            index = order[start : start + self.config.batch_size]
            if index.numel() < 2:
                logging.debug("Epoch %d: dropping a minibatch of size %d", epoch, index.numel())
                continue
            breakdown = self.step(self.X[index], self.c[index] if self.conditional else None)
            values = breakdown.as_dict()
            offending = breakdown.first_non_finite()
            if offending is not None:
                raise TrainingDivergedError(offending, epoch, values[offending])
            for key in LOSS_TERMS:
                sums[key] += values[key]
            batches += 1
        return {key: total / batches for key, total in sums.items()}

    def log(self, epoch: int, losses: Dict[str, float]) -> None:
        Z = self.embed()
        labels, _ = self.partition(Z)
        record = EpochRecord(epoch=epoch, **losses, **partition_scores(labels, self.bundle))
        if self.bank is not None:
            record.mi_lower_bound = float(
                cluster_mi_lower_bound(
                    torch.from_numpy(Z), torch.from_numpy(labels), self.bank.e, self.config.tau
                )
            )
        log_epoch(self.run_dir, record)
        self.record.epochs.append(record)
        logging.info(
            "Epoch %d/%d: total %.4f (recon %.4f, kl %.4f, pairwise %.4f, cluster %.4f) acc %s leakage %s",
            epoch,
            self.config.epochs,
            record.total,
            record.recon,
            record.kl_prior,
            record.pairwise_kl,
            record.cluster,
            "n/a" if record.acc is None else f"{record.acc:.4f}",
            "n/a" if record.leakage is None else f"{record.leakage:.4f}",
        )

    def train(self) -> RunRecord:
        """
        Trains for the configured number of epochs and persists the run.

        Returns:
            RunRecord: The logged epochs and the final partition.

        Raises:
            TrainingDivergedError: If a loss term becomes non-finite.
        """
        torch.use_deterministic_algorithms(True)
        torch.set_num_threads(self.config.num_threads)
        started = time.perf_counter()
        prepare_run_dir(self.run_dir)
        write_config(self.run_dir, self.config.to_dict())
        logging.info(
            "Training %s (ablation %s) on N=%d, D=%d, K=%d for %d epochs into %s",
            self.method,
            self.config.ablation,
            self.bundle.n,
            self.bundle.d_input,
            self.bundle.k_clusters,
            self.config.epochs,
            self.run_dir,
        )
        if self.config.epochs == 0:
            return self.record

        self.network.train()
        for epoch in range(1, self.config.epochs + 1):
            if self.config.cluster and self.bank is None and epoch > self.config.warmup_epochs:
                logging.info("Warmup finished after %d epochs", self.config.warmup_epochs)
                self.initialize_centroids(self.embed())
            losses = self.run_epoch(epoch)
            if epoch % self.config.log_every == 0 or epoch == self.config.epochs:
                if epoch == self.config.epochs and self.config.cluster and self.bank is None:
                    logging.info("Training ended inside warmup; initializing centroids on final embeddings")
                    self.initialize_centroids(self.embed())
                self.log(epoch, losses)

        Z = self.embed()
        labels, centroids = self.partition(Z)
        save_model(self.network, os.path.join(self.run_dir, MODEL_FILE))
        write_partition(self.run_dir, labels, centroids, Z)
        self.record.labels = labels
        self.record.centroids = centroids
        self.record.embeddings = Z
        self.record.scores = partition_scores(labels, self.bundle)
        self.record.elapsed_seconds = time.perf_counter() - started
        write_summary(
            self.run_dir,
            {
                "method": self.method,
                "ablation": self.config.ablation,
                "data_dir": self.data_dir,
                "scores": self.record.scores,
                "elapsed_seconds": self.record.elapsed_seconds,
            },
        )
        logging.info("Run finished in %.1f s: %s", self.record.elapsed_seconds, self.record.scores)
        return self.record


def train_scab(
    bundle: DatasetBundle, config: TrainConfig, run_dir: str, data_dir: Optional[str] = None
) -> RunRecord:
    """
    Trains the model and writes the run directory.

    Args:
        bundle (DatasetBundle): Training data with a fully observed confound.
        config (TrainConfig): The run configuration.
        run_dir (str): The run directory.
        data_dir (str, optional): The dataset directory, recorded for later reports.

    Returns:
        RunRecord: The run.
    """
    return ScabTrainer(bundle, config, run_dir, data_dir=data_dir).train()
