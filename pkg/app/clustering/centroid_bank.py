"""
This module contains the soft k-means head of the model: the centroid bank with its exponential-moving-average
accumulators, temperature-softmax and hard assignment, centroid initialization and partition extraction.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Union

import numpy as np
import torch
import torch.nn.functional as F

from app.clustering.lloyd import lloyd, seed_centroids
from app.utils.exceptions import InvalidArgumentError
from app.utils.helper import derive_seed

ArrayLike = Union[np.ndarray, torch.Tensor]


@dataclass(frozen=True, eq=False)
class CentroidBank:
    """
    K centroids e with their EMA numerators mu (K x d) and masses B (K), decay gamma and temperature tau.
    After every update e_k = mu_k / B_k.
    """

    e: torch.Tensor
    mu: torch.Tensor
    mass: torch.Tensor
    gamma: float = 0.995
    tau: float = 5.0

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgumentError("gamma must lie in [0, 1]")
        if self.tau <= 0:
            raise InvalidArgumentError("tau must be positive")

    @classmethod
    def from_centroids(cls, centroids: ArrayLike, gamma: float = 0.995, tau: float = 5.0) -> "CentroidBank":
        """
        Builds a bank whose accumulators start at mu_k = e_k and B_k = 1.

        Args:
            centroids (ArrayLike): K x d initial centroids.
            gamma (float): The EMA decay.
            tau (float): The softmax temperature.

        Returns:
            CentroidBank: The bank, held in float64.
        """
        e = torch.as_tensor(np.asarray(centroids), dtype=torch.float64).clone()
        return cls(e=e, mu=e.clone(), mass=torch.ones(e.shape[0], dtype=torch.float64), gamma=gamma, tau=tau)

    @property
    def n_clusters(self) -> int:
        return self.e.shape[0]

    def centroids_for(self, z: torch.Tensor) -> torch.Tensor:
        """The assigned centroid of every embedding, detached and in the embedding dtype."""
        return self.e.to(z.dtype)[soft_assign(z.detach(), self).s]


@dataclass(eq=False)
class Assignment:
    """Soft responsibilities lambda (B x K, rows sum to 1) and hard labels s = argmax_k lambda."""

    lam: torch.Tensor
    s: torch.Tensor


def squared_distances(z: torch.Tensor, e: torch.Tensor) -> torch.Tensor:
    return torch.sum((z.unsqueeze(1) - e.unsqueeze(0)) ** 2, dim=-1)


def soft_assign(z: torch.Tensor, bank: CentroidBank) -> Assignment:
    """
    lambda_nk = softmax_k(-tau ||z_n - e_k||^2); the hard label is the nearest centroid (lowest index on ties),
    which is the argmax of lambda for every tau > 0.

    Args:
        z (torch.Tensor): B x d embeddings.
        bank (CentroidBank): The centroid bank.

    Returns:
        Assignment: Soft and hard assignments.
    """
    distances = squared_distances(z.to(bank.e.dtype), bank.e)
    lam = torch.softmax(-bank.tau * distances, dim=-1)
    return Assignment(lam=lam, s=torch.argmin(distances, dim=-1))


def ema_update(bank: CentroidBank, z: torch.Tensor, s: torch.Tensor) -> CentroidBank:
    """
    mu_k <- gamma mu_k + (1 - gamma) sum_b s_bk z_b; B_k <- gamma B_k + (1 - gamma) sum_b s_bk; e_k <- mu_k / B_k.

    Args:
        bank (CentroidBank): The current bank, with positive masses.
        z (torch.Tensor): B x d embeddings (detached).
        s (torch.Tensor): B hard labels.

    Returns:
        CentroidBank: The updated bank.
    """
    z = z.detach().to(bank.e.dtype)
    one_hot = F.one_hot(s.long(), bank.n_clusters).to(bank.e.dtype)
    mu = bank.gamma * bank.mu + (1.0 - bank.gamma) * (one_hot.T @ z)
    mass = bank.gamma * bank.mass + (1.0 - bank.gamma) * one_hot.sum(dim=0)
    # a cluster whose mass has decayed to zero keeps its previous centroid
    e = torch.where(mass.unsqueeze(-1) > 0, mu / mass.clamp_min(1e-300).unsqueeze(-1), bank.e)
    return replace(bank, e=e, mu=mu, mass=mass)


def init_centroids(
    Z: ArrayLike,
    n_clusters: int,
    seed: int,
    gamma: float = 0.995,
    tau: float = 5.0,
    lloyd_iters: int = 10,
    n_init: int = 1,
) -> CentroidBank:
    """
    k-means++ seeding on the embeddings followed by a few Lloyd iterations.

    With `n_init` > 1 the seeding is repeated; the first attempt uses `seed` itself, attempt r > 0 the child seed
    derive_seed(seed, r), and the attempt of lowest inertia (then lowest index) initializes the bank.

    Args:
        Z (ArrayLike): N x d embeddings.
        n_clusters (int): The number of clusters K.
        seed (int): Seed of the seeding stream.
        gamma (float): The EMA decay of the bank.
        tau (float): The softmax temperature of the bank.
        lloyd_iters (int): The number of Lloyd iterations.
        n_init (int): The number of seeding attempts.

    Returns:
        CentroidBank: A bank with mu_k = e_k and B_k = 1.

    Raises:
        InvalidArgumentError: If there are fewer embeddings than clusters or n_init < 1.
    """
    Z = np.asarray(Z.detach().cpu() if isinstance(Z, torch.Tensor) else Z, dtype=np.float64)
    if n_clusters < 1 or Z.shape[0] < n_clusters:
        raise InvalidArgumentError(f"need N >= K >= 1, got N={Z.shape[0]}, K={n_clusters}")
    if n_init < 1:
        raise InvalidArgumentError("n_init must be at least 1")
    attempts = [
        lloyd(Z, seed_centroids(Z, n_clusters, seed if r == 0 else derive_seed(seed, r)), lloyd_iters)
        for r in range(n_init)
    ]
    best = min(range(n_init), key=lambda r: (attempts[r].inertia, r))
    result = attempts[best]
    logging.info("Initialized %d centroids (inertia %.4f, attempt %d of %d)", n_clusters, result.inertia, best, n_init)
    return CentroidBank.from_centroids(result.centroids, gamma=gamma, tau=tau)


def extract_partition(Z: ArrayLike, bank: CentroidBank) -> List[np.ndarray]:
    """
    Groups sample indices by hard assignment: S_k = {n : s_n = k}. Empty clusters are kept and reported.

    Args:
        Z (ArrayLike): N x d embeddings.
        bank (CentroidBank): The centroid bank.

    Returns:
        list: K sorted index arrays, disjoint and covering 0..N-1.
    """
    labels = partition_labels(Z, bank)
    partition = [np.flatnonzero(labels == k) for k in range(bank.n_clusters)]
    empty = [k for k, members in enumerate(partition) if members.size == 0]
    if empty:
        logging.warning("Partition has %d empty cluster(s): %s", len(empty), empty)
    return partition


def partition_labels(Z: ArrayLike, bank: CentroidBank) -> np.ndarray:
    """Hard assignment label of every embedding, as an int64 array."""
    Z = torch.as_tensor(np.asarray(Z.detach().cpu() if isinstance(Z, torch.Tensor) else Z))
    return soft_assign(Z, bank).s.cpu().numpy().astype(np.int64)
