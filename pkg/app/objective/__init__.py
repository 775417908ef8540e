from .losses import (
    RECON_BERNOULLI,
    RECON_KINDS,
    RECON_SQUARED,
    LossBreakdown,
    VaeTerms,
    cluster_loss,
    cluster_mi_lower_bound,
    kl_between_diag_gaussians,
    kl_to_standard_normal,
    mi_pairwise_term,
    pairwise_kl_matrix,
    reconstruction_loss,
    total_loss,
    vae_loss,
)

__all__ = [
    "RECON_BERNOULLI",
    "RECON_KINDS",
    "RECON_SQUARED",
    "LossBreakdown",
    "VaeTerms",
    "cluster_loss",
    "cluster_mi_lower_bound",
    "kl_between_diag_gaussians",
    "kl_to_standard_normal",
    "mi_pairwise_term",
    "pairwise_kl_matrix",
    "reconstruction_loss",
    "total_loss",
    "vae_loss",
]
