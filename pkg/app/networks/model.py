"""
This module contains the parameterized maps of the model: a Gaussian-posterior encoder, a decoder conditioned on
the confounding factor, and the linear skip-connection that fuses an embedding with its assigned centroid.
"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import torch
import torch.nn.functional as F
from torch import nn

from app.utils.exceptions import InvalidArgumentError

LOG_VAR_BOUND = 10.0

CONDITION_NONE = "none"
CONDITION_DISCRETE = "discrete"
CONDITION_CONTINUOUS = "continuous"
CONDITION_KINDS = (CONDITION_NONE, CONDITION_DISCRETE, CONDITION_CONTINUOUS)

HEAD_IDENTITY = "identity"
HEAD_SIGMOID = "sigmoid"
OUTPUT_HEADS = (HEAD_IDENTITY, HEAD_SIGMOID)


@dataclass
class GaussianPosterior:
    """A batch of diagonal Gaussians q(z|x), each row one sample."""

    mean: torch.Tensor
    log_var: torch.Tensor

    @property
    def variance(self) -> torch.Tensor:
        return torch.exp(self.log_var)

    def __len__(self) -> int:
        return self.mean.shape[0]


def reparameterize(posterior: GaussianPosterior, noise: torch.Tensor) -> torch.Tensor:
    """
    Draws z = mean + exp(log_var / 2) * noise.

    Args:
        posterior (GaussianPosterior): The posterior batch.
        noise (torch.Tensor): Standard-normal noise of the same shape.

    Returns:
        torch.Tensor: The sampled embeddings.

    Raises:
        InvalidArgumentError: If the noise shape differs from the posterior's.
    """
    if noise.shape != posterior.mean.shape:
        raise InvalidArgumentError(
            f"noise shape {tuple(noise.shape)} does not match posterior {tuple(posterior.mean.shape)}"
        )
    return posterior.mean + torch.exp(0.5 * posterior.log_var) * noise


def _mlp(widths: Sequence[int]) -> nn.Sequential:
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        layers.append(nn.Linear(fan_in, fan_out))
        if i < len(widths) - 2:
            layers.append(nn.ReLU())
    return nn.Sequential(*layers)


class ScabNetwork(nn.Module):
    """
    The network parameters of the model: encoder, conditional decoder and fusion layer.

    The encoder is an MLP D-h1-...-hH whose last hidden layer feeds a mean head and a log-variance head of width d.
    The decoder mirrors it, taking the fused embedding concatenated with the conditioning vector (one-hot class,
    scalar value, or nothing). All hidden layers use ReLU; the output heads are linear except the optional sigmoid
    on the decoder output.
    """

    def __init__(
        self,
        d_input: int,
        latent_dim: int = 10,
        hidden_dims: Sequence[int] = (500, 500, 2000),
        condition_kind: str = CONDITION_DISCRETE,
        g_categories: Optional[int] = None,
        output_head: str = HEAD_SIGMOID,
        seed: int = 0,
    ) -> None:
        super().__init__()
        if d_input < 1 or latent_dim < 1 or any(h < 1 for h in hidden_dims):
            raise InvalidArgumentError("layer widths must be positive")
        if condition_kind not in CONDITION_KINDS:
            raise InvalidArgumentError(f"unknown conditioning kind '{condition_kind}'")
        if output_head not in OUTPUT_HEADS:
            raise InvalidArgumentError(f"unknown output head '{output_head}'")
        if condition_kind == CONDITION_DISCRETE and (g_categories is None or g_categories < 1):
            raise InvalidArgumentError("discrete conditioning needs g_categories >= 1")

        self.d_input = d_input
        self.latent_dim = latent_dim
        self.hidden_dims = tuple(int(h) for h in hidden_dims)
        self.condition_kind = condition_kind
        self.g_categories = g_categories if condition_kind == CONDITION_DISCRETE else None
        self.output_head = output_head

        encoder_widths = [d_input, *self.hidden_dims]
        self.encoder = nn.Sequential(_mlp(encoder_widths), nn.ReLU()) if self.hidden_dims else nn.Identity()
        last = encoder_widths[-1]
        self.mean_head = nn.Linear(last, latent_dim)
        self.log_var_head = nn.Linear(last, latent_dim)
        self.decoder = _mlp([latent_dim + self.condition_width, *reversed(self.hidden_dims), d_input])
        self.fusion = nn.Linear(2 * latent_dim, latent_dim)
        self.reset_parameters(seed)

    @property
    def condition_width(self) -> int:
        if self.condition_kind == CONDITION_DISCRETE:
            return self.g_categories
        if self.condition_kind == CONDITION_CONTINUOUS:
            return 1
        return 0

    def reset_parameters(self, seed: int) -> None:
        """
        Initializes every linear layer with U(-1/sqrt(fan_in), 1/sqrt(fan_in)) from a seeded generator.

        Args:
            seed (int): Seed of the initialization stream.
        """
        generator = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            for module in self.modules():
                if isinstance(module, nn.Linear):
                    bound = 1.0 / module.in_features**0.5
                    module.weight.uniform_(-bound, bound, generator=generator)
                    module.bias.uniform_(-bound, bound, generator=generator)

    def encode(self, x: torch.Tensor) -> GaussianPosterior:
        """
        Maps a batch to its Gaussian posteriors; the log-variance is clamped to [-10, 10].

        Args:
            x (torch.Tensor): A B x D batch.

        Returns:
            GaussianPosterior: B posteriors of dimension d.

        Raises:
            InvalidArgumentError: If the batch shape does not match the input dimension.
        """
        if x.dim() != 2 or x.shape[1] != self.d_input:
            raise InvalidArgumentError(
                f"expected a batch of shape (B, {self.d_input}), got {tuple(x.shape)}"
            )
        hidden = self.encoder(x)
        log_var = torch.clamp(self.log_var_head(hidden), -LOG_VAR_BOUND, LOG_VAR_BOUND)
        return GaussianPosterior(mean=self.mean_head(hidden), log_var=log_var)

    def fuse(self, z: torch.Tensor, z_tilde: torch.Tensor) -> torch.Tensor:
        """
        Skip-connection z_hat = W [z ; z_tilde] + b.

        Args:
            z (torch.Tensor): B x d embeddings.
            z_tilde (torch.Tensor): B x d assigned centroids.

        Returns:
            torch.Tensor: B x d fused embeddings.

        Raises:
            InvalidArgumentError: If the shapes disagree with each other or with d.
        """
        if z.shape != z_tilde.shape or z.shape[-1] != self.latent_dim:
            raise InvalidArgumentError(
                f"fuse expects two (B, {self.latent_dim}) inputs, got {tuple(z.shape)} and {tuple(z_tilde.shape)}"
            )
        return self.fusion(torch.cat([z, z_tilde], dim=-1))

    def condition(self, c: Optional[torch.Tensor], batch_size: int, dtype: torch.dtype) -> torch.Tensor:
        """
        Builds the conditioning vectors fed to the decoder.

        Args:
            c (Optional[torch.Tensor]): Class indices (discrete), values in [0, 1] (continuous), or None.
            batch_size (int): The batch size B.
            dtype (torch.dtype): The floating dtype of the result.

        Returns:
            torch.Tensor: A B x width matrix (width 0 for an unconditional decoder).

        Raises:
            InvalidArgumentError: If a class index is out of range or labels are missing.
        """
        if self.condition_kind == CONDITION_NONE:
            return torch.zeros(batch_size, 0, dtype=dtype)
        if c is None or c.shape != (batch_size,):
            raise InvalidArgumentError("the conditional decoder needs one confound value per sample")
        if self.condition_kind == CONDITION_DISCRETE:
            if c.numel() and (int(c.min()) < 0 or int(c.max()) >= self.g_categories):
                raise InvalidArgumentError(
                    f"confound class index must lie in [0, {self.g_categories})"
                )
            return F.one_hot(c.long(), self.g_categories).to(dtype)
        return c.to(dtype).unsqueeze(-1)

    def decode(self, z_hat: torch.Tensor, c: Optional[torch.Tensor]) -> torch.Tensor:
        """
        Reconstructs inputs from fused embeddings and confound values.

        Args:
            z_hat (torch.Tensor): B x d fused embeddings.
            c (Optional[torch.Tensor]): The confound value of every sample.

        Returns:
            torch.Tensor: B x D reconstructions.
        """
        if z_hat.dim() != 2 or z_hat.shape[1] != self.latent_dim:
            raise InvalidArgumentError(
                f"expected embeddings of shape (B, {self.latent_dim}), got {tuple(z_hat.shape)}"
            )
        conditioning = self.condition(c, z_hat.shape[0], z_hat.dtype)
        output = self.decoder(torch.cat([z_hat, conditioning], dim=-1))
        if self.output_head == HEAD_SIGMOID:
            output = torch.sigmoid(output)
        return output

    def forward(
        self,
        x: torch.Tensor,
        c: Optional[torch.Tensor],
        noise: torch.Tensor,
        z_tilde: Optional[torch.Tensor] = None,
    ) -> Tuple[GaussianPosterior, torch.Tensor, torch.Tensor]:
        """
        Full pass encode -> reparameterize -> fuse -> decode. Without centroids the embedding is fused with itself.

        Args:
            x (torch.Tensor): A B x D batch.
            c (Optional[torch.Tensor]): The confound value of every sample.
            noise (torch.Tensor): B x d standard-normal noise.
            z_tilde (Optional[torch.Tensor]): B x d assigned centroids.

        Returns:
            tuple: The posterior, the sampled embedding z and the reconstruction.
        """
        posterior = self.encode(x)
        z = reparameterize(posterior, noise)
        z_hat = self.fuse(z, z if z_tilde is None else z_tilde)
        return posterior, z, self.decode(z_hat, c)

    @torch.no_grad()
    def embed(self, X: torch.Tensor, batch_size: int = 1024) -> torch.Tensor:
        """
        Posterior means of a whole dataset, evaluated in fixed-order chunks.

        Args:
            X (torch.Tensor): An N x D matrix.
            batch_size (int): The chunk size.

        Returns:
            torch.Tensor: The N x d posterior means.
        """
        chunks = [self.encode(X[i : i + batch_size]).mean for i in range(0, X.shape[0], batch_size)]
        if not chunks:
            return torch.zeros(0, self.latent_dim, dtype=X.dtype)
        return torch.cat(chunks)
