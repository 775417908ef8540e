"""
This module contains every loss term of the model: the conditional-ELBO autoencoding loss, the pairwise-KL
surrogate of the mutual information between embedding and confound, the k-means loss on the embedding, their
weighted combination, and the cluster-assignment mutual-information lower bound used as a diagnostic.

All terms are per-sample means, so the weights eta1 and eta2 do not depend on the batch size.
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional

import torch
import torch.nn.functional as F

from app.networks.model import GaussianPosterior, ScabNetwork, reparameterize
from app.utils.exceptions import InvalidArgumentError

RECON_SQUARED = "squared"
RECON_BERNOULLI = "bernoulli"
RECON_KINDS = (RECON_SQUARED, RECON_BERNOULLI)


def kl_to_standard_normal(posterior: GaussianPosterior) -> torch.Tensor:
    """
    KL[q(z|x) || N(0, I)] = 1/2 sum_j (mu_j^2 + sigma_j^2 - 1 - log sigma_j^2), one value per sample.

    Args:
        posterior (GaussianPosterior): The posterior batch.

    Returns:
        torch.Tensor: A vector of B non-negative divergences.
    """
    mean, log_var = posterior.mean, posterior.log_var
    return 0.5 * torch.sum(mean**2 + torch.exp(log_var) - 1.0 - log_var, dim=-1)


def kl_between_diag_gaussians(p: GaussianPosterior, q: GaussianPosterior) -> torch.Tensor:
    """
    KL[p || q] between row-aligned diagonal Gaussians.

    Args:
        p (GaussianPosterior): The first batch.
        q (GaussianPosterior): The second batch, same shape.

    Returns:
        torch.Tensor: A vector of B non-negative divergences.

    Raises:
        InvalidArgumentError: If the two batches differ in shape.
    """
    if p.mean.shape != q.mean.shape:
        raise InvalidArgumentError("KL between Gaussians of different dimensions")
    var_p, var_q = torch.exp(p.log_var), torch.exp(q.log_var)
    return 0.5 * torch.sum(
        q.log_var - p.log_var + (var_p + (p.mean - q.mean) ** 2) / var_q - 1.0, dim=-1
    )


def pairwise_kl_matrix(posterior: GaussianPosterior) -> torch.Tensor:
    """
    Entry (n, m) is KL[q(z|x_n) || q(z|x_m)] for every ordered pair of the batch.

    Args:
        posterior (GaussianPosterior): The posterior batch.

    Returns:
        torch.Tensor: A B x B matrix with a zero diagonal.
    """
    mean, log_var = posterior.mean, posterior.log_var
    var = torch.exp(log_var)
    diff = mean.unsqueeze(1) - mean.unsqueeze(0)
    ratio = (var.unsqueeze(1) + diff**2) / var.unsqueeze(0)
    return 0.5 * torch.sum(log_var.unsqueeze(0) - log_var.unsqueeze(1) + ratio - 1.0, dim=-1)


def mi_pairwise_term(posterior: GaussianPosterior) -> torch.Tensor:
    """
    Mean pairwise KL over the B^2 ordered pairs of the batch; driving it down removes posterior differences the
    conditional decoder does not need, i.e. information about the confound.

    Args:
        posterior (GaussianPosterior): At least two posteriors.

    Returns:
        torch.Tensor: A non-negative scalar.

    Raises:
        InvalidArgumentError: If the batch holds fewer than two posteriors.
    """
    if len(posterior) < 2:
        raise InvalidArgumentError("the pairwise term needs a batch of at least 2 samples")
    return pairwise_kl_matrix(posterior).mean()


def reconstruction_loss(x: torch.Tensor, x_recon: torch.Tensor, kind: str) -> torch.Tensor:
    """
    Per-sample reconstruction loss summed over features and averaged over the batch.

    'squared' is the squared error; 'bernoulli' is the binary cross-entropy, whose log terms are clamped at -100 so
    saturated decoder outputs stay finite.

    Args:
        x (torch.Tensor): Targets, B x D.
        x_recon (torch.Tensor): Reconstructions, B x D.
        kind (str): 'squared' or 'bernoulli'.

    Returns:
        torch.Tensor: A non-negative scalar.

    Raises:
        InvalidArgumentError: On shape mismatch, unknown kind, or out-of-range values for 'bernoulli'.
    """
    if x.shape != x_recon.shape:
        raise InvalidArgumentError(
            f"reconstruction shape {tuple(x_recon.shape)} does not match input {tuple(x.shape)}"
        )
    if kind == RECON_SQUARED:
        per_sample = torch.sum((x - x_recon) ** 2, dim=-1)
    elif kind == RECON_BERNOULLI:
        if x.numel() and (x.min() < 0 or x.max() > 1 or x_recon.min() < 0 or x_recon.max() > 1):
            raise InvalidArgumentError("bernoulli reconstruction needs values in [0, 1]")
        per_sample = torch.sum(F.binary_cross_entropy(x_recon, x, reduction="none"), dim=-1)
    else:
        raise InvalidArgumentError(f"unknown reconstruction kind '{kind}'")
    return per_sample.mean()


@dataclass
class VaeTerms:
    """Output of one autoencoding pass over a batch."""

    recon: torch.Tensor
    kl_prior: torch.Tensor
    posterior: GaussianPosterior
    z: torch.Tensor
    x_recon: torch.Tensor


def vae_loss(
    network: ScabNetwork,
    x: torch.Tensor,
    c: Optional[torch.Tensor],
    noise: torch.Tensor,
    recon_kind: str,
    centroid_lookup: Optional[Callable[[torch.Tensor], torch.Tensor]] = None,
    fuse: bool = True,
) -> VaeTerms:
    """
    Monte Carlo estimate of the negative conditional ELBO with one particle per sample.

    The particle z is fused with the centroid returned by `centroid_lookup` (with z itself when no centroids exist
    yet) and decoded under the sample's confound value.

    Args:
        network (ScabNetwork): The network.
        x (torch.Tensor): A B x D batch.
        c (Optional[torch.Tensor]): Confound values, or None for an unconditional decoder.
        noise (torch.Tensor): B x d standard-normal noise.
        recon_kind (str): 'squared' or 'bernoulli'.
        centroid_lookup (Optional[Callable]): Maps z to its assigned centroids.
        fuse (bool): When False the decoder receives z directly.

    Returns:
        VaeTerms: The reconstruction and prior-KL means plus the intermediate tensors.
    """
    posterior = network.encode(x)
    z = reparameterize(posterior, noise)
    if not fuse:
        z_hat = z
    else:
        z_tilde = z if centroid_lookup is None else centroid_lookup(z)
        z_hat = network.fuse(z, z_tilde)
    x_recon = network.decode(z_hat, c)
    return VaeTerms(
        recon=reconstruction_loss(x, x_recon, recon_kind),
        kl_prior=kl_to_standard_normal(posterior).mean(),
        posterior=posterior,
        z=z,
        x_recon=x_recon,
    )


def _hard_labels(s: torch.Tensor, n_clusters: int) -> torch.Tensor:
    if s.dim() == 2:
        s = torch.argmax(s, dim=-1)
    s = s.long()
    if s.numel() and (int(s.min()) < 0 or int(s.max()) >= n_clusters):
        raise InvalidArgumentError(f"assignment index must lie in [0, {n_clusters})")
    return s


def cluster_loss(z: torch.Tensor, s: torch.Tensor, e: torch.Tensor) -> torch.Tensor:
    """
    Mean squared distance between each embedding and its assigned centroid.

    Args:
        z (torch.Tensor): B x d embeddings.
        s (torch.Tensor): Hard assignments, as B indices or B x K one-hot rows.
        e (torch.Tensor): K x d centroids; gradients do not flow into them.

    Returns:
        torch.Tensor: A non-negative scalar.

    Raises:
        InvalidArgumentError: If an assignment index is out of range.
    """
    labels = _hard_labels(s, e.shape[0])
    assigned = e.detach().to(z.dtype)[labels]
    return torch.sum((z - assigned) ** 2, dim=-1).mean()


def cluster_mi_lower_bound(z: torch.Tensor, s: torch.Tensor, e: torch.Tensor, tau: float) -> torch.Tensor:
    """
    Mean over samples of sum_k s_nk log lambda_nk, with lambda the temperature softmax over negative squared
    distances. Always <= 0; it approaches 0 as assignments become confident.

    Args:
        z (torch.Tensor): B x d embeddings.
        s (torch.Tensor): Hard assignments, as B indices or B x K one-hot rows.
        e (torch.Tensor): K x d centroids.
        tau (float): The softmax temperature, > 0.

    Returns:
        torch.Tensor: A non-positive scalar.
    """
    if tau <= 0:
        raise InvalidArgumentError("tau must be positive")
    labels = _hard_labels(s, e.shape[0])
    distances = torch.sum((z.unsqueeze(1) - e.to(z.dtype).unsqueeze(0)) ** 2, dim=-1)
    log_lambda = torch.log_softmax(-tau * distances, dim=-1)
    return torch.clamp(log_lambda.gather(1, labels.unsqueeze(1)).mean(), max=0.0)


@dataclass
class LossBreakdown:
    """
    The weighted objective total = (1 + eta1) * recon + kl_prior + eta1 * pairwise_kl + eta2 * cluster.

    The reconstruction term is shared by the autoencoding loss and the mutual-information bound, so it is computed
    once and weighted (1 + eta1).
    """

    recon: torch.Tensor
    kl_prior: torch.Tensor
    pairwise_kl: torch.Tensor
    cluster: torch.Tensor
    total: torch.Tensor
    eta1: float
    eta2: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "recon": self.recon.detach().item(),
            "kl_prior": self.kl_prior.detach().item(),
            "pairwise_kl": self.pairwise_kl.detach().item(),
            "cluster": self.cluster.detach().item(),
            "total": self.total.detach().item(),
        }

    def first_non_finite(self) -> Optional[str]:
        """Name of the first non-finite component, or None."""
        for name, value in self.as_dict().items():
            if not math.isfinite(value):
                return name
        return None


def total_loss(
    recon: torch.Tensor,
    kl_prior: torch.Tensor,
    pairwise_kl: torch.Tensor,
    cluster: torch.Tensor,
    eta1: float,
    eta2: float,
) -> LossBreakdown:
    """
    Combines the loss terms into the training objective.

    Args:
        recon (torch.Tensor): Reconstruction term.
        kl_prior (torch.Tensor): KL to the standard-normal prior.
        pairwise_kl (torch.Tensor): Pairwise-KL surrogate.
        cluster (torch.Tensor): k-means term.
        eta1 (float): Weight of the mutual-information bound, >= 0.
        eta2 (float): Weight of the clustering term, >= 0.

    Returns:
        LossBreakdown: The components and their weighted total.

    Raises:
        InvalidArgumentError: If a weight is negative.
    """
    if eta1 < 0 or eta2 < 0:
        raise InvalidArgumentError("loss weights must be non-negative")
    recon, kl_prior, pairwise_kl, cluster = (
        torch.as_tensor(t) for t in (recon, kl_prior, pairwise_kl, cluster)
    )
    total = (1.0 + eta1) * recon + kl_prior + eta1 * pairwise_kl + eta2 * cluster
    return LossBreakdown(
        recon=recon,
        kl_prior=kl_prior,
        pairwise_kl=pairwise_kl,
        cluster=cluster,
        total=total,
        eta1=eta1,
        eta2=eta2,
    )
