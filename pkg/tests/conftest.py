import pytest

from app.datasets import generate_two_factor_gaussians
from app.harness import TrainConfig


@pytest.fixture
def gaussians():
    """Two interest classes, two confound classes; the confound shift dominates."""
    return generate_two_factor_gaussians(
        k_clusters=2,
        g_categories=2,
        n_per_cell=20,
        dim=4,
        interest_gap=6.0,
        confound_gap=12.0,
        noise_sigma=1.0,
        seed=0,
    )


@pytest.fixture
def tiny_config():
    """A configuration small enough to train in well under a second."""
    return TrainConfig(
        epochs=3,
        batch_size=16,
        latent_dim=2,
        hidden_dims=[8, 8],
        warmup_epochs=1,
        log_every=1,
        kmeans_n_init=2,
        kmeans_max_iters=20,
        seed=7,
    )
