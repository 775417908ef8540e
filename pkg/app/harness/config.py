"""
This module contains the training configuration: its defaults, validation, the JSON config file with command-line
overrides, and the mapping from ablation names to loss weights and architecture switches.
"""

import dataclasses
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional

from app.objective.losses import RECON_BERNOULLI, RECON_KINDS, RECON_SQUARED
from app.utils.exceptions import InvalidArgumentError
from app.utils.helper import read_json

ABLATION_NONE = "none"
ABLATION_NO_DIS = "no_dis"
ABLATION_NO_CLU = "no_clu"
ABLATION_NO_DIS_NO_CLU = "no_dis_no_clu"
ABLATIONS = (ABLATION_NONE, ABLATION_NO_DIS, ABLATION_NO_CLU, ABLATION_NO_DIS_NO_CLU)

RECON_AUTO = "auto"


@dataclass
class TrainConfig:
    """Hyperparameters of one training run; every field is written to the run's config.json."""

    eta1: float = 1.0
    eta2: float = 0.1
    learning_rate: float = 5e-4
    epochs: int = 1000
    batch_size: int = 256
    latent_dim: int = 10
    tau: float = 5.0
    gamma: float = 0.995
    warmup_epochs: int = 20
    recon_kind: str = RECON_AUTO
    seed: int = 0
    ablation: str = ABLATION_NONE
    hidden_dims: List[int] = field(default_factory=lambda: [500, 500, 2000])
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    log_every: int = 10
    kmeans_n_init: int = 10
    kmeans_max_iters: int = 300
    init_lloyd_iters: int = 10
    n_jobs: int = 1
    num_threads: int = 1

    def validate(self) -> "TrainConfig":
        """
        Checks every field against its domain.

        Returns:
            TrainConfig: The config itself, for chaining.

        Raises:
            InvalidArgumentError: On the first field outside its domain.
        """
        if self.eta1 < 0 or self.eta2 < 0:
            raise InvalidArgumentError("eta1 and eta2 must be non-negative")
        if self.learning_rate <= 0:
            raise InvalidArgumentError("learning_rate must be positive")
        if self.tau <= 0:
            raise InvalidArgumentError("tau must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise InvalidArgumentError("gamma must lie in [0, 1]")
        for name in ("batch_size", "latent_dim", "log_every", "kmeans_n_init", "num_threads"):
            if getattr(self, name) < 1:
                raise InvalidArgumentError(f"{name} must be positive")
        for name in ("epochs", "warmup_epochs", "kmeans_max_iters", "init_lloyd_iters"):
            if getattr(self, name) < 0:
                raise InvalidArgumentError(f"{name} must be non-negative")
        if self.n_jobs == 0:
            raise InvalidArgumentError("n_jobs must be non-zero")
        if any(h < 1 for h in self.hidden_dims):
            raise InvalidArgumentError("hidden_dims must be positive")
        if not (0.0 <= self.adam_beta1 < 1.0 and 0.0 <= self.adam_beta2 < 1.0) or self.adam_eps <= 0:
            raise InvalidArgumentError("adam moments must lie in [0, 1) and adam_eps must be positive")
        if self.ablation not in ABLATIONS:
            raise InvalidArgumentError(f"unknown ablation '{self.ablation}'; expected one of {ABLATIONS}")
        if self.recon_kind not in (RECON_AUTO, *RECON_KINDS):
            raise InvalidArgumentError(f"unknown recon_kind '{self.recon_kind}'")
        return self

    @property
    def disentangle(self) -> bool:
        """Whether the pairwise-KL term and the conditional decoder are active."""
        return self.ablation in (ABLATION_NONE, ABLATION_NO_CLU)

    @property
    def cluster(self) -> bool:
        """Whether the centroid bank, fusion and k-means term are active."""
        return self.ablation in (ABLATION_NONE, ABLATION_NO_DIS)

    @property
    def effective_eta1(self) -> float:
        return self.eta1 if self.disentangle else 0.0

    @property
    def effective_eta2(self) -> float:
        return self.eta2 if self.cluster else 0.0

    def resolve_recon_kind(self, unit_interval: bool) -> str:
        if self.recon_kind != RECON_AUTO:
            return self.recon_kind
        return RECON_BERNOULLI if unit_interval else RECON_SQUARED

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def config_fields() -> List[str]:
    return [f.name for f in dataclasses.fields(TrainConfig)]


def load_config(path: Optional[str] = None, **overrides: Any) -> TrainConfig:
    """
    Builds a config from defaults, an optional JSON file and keyword overrides, in increasing precedence.
    Overrides whose value is None are ignored, so unset command-line flags leave file values alone.

    Args:
        path (str, optional): A flat JSON object keyed by TrainConfig field names.
        **overrides: Field values taking precedence over the file.

    Returns:
        TrainConfig: The validated config.

    Raises:
        InvalidArgumentError: On a missing file, unknown keys or invalid values.
    """
    known = set(config_fields())
    values: Dict[str, Any] = {}
    if path is not None:
        if not os.path.exists(path):
            raise InvalidArgumentError(f"config file {path} not found")
        document = read_json(path)
        if not isinstance(document, dict):
            raise InvalidArgumentError(f"config file {path} must hold a JSON object")
        unknown = sorted(set(document) - known)
        if unknown:
            raise InvalidArgumentError(f"unknown config keys in {path}: {unknown}")
        values.update(document)
    for key, value in overrides.items():
        if key not in known:
            raise InvalidArgumentError(f"unknown config key '{key}'")
        if value is not None:
            values[key] = value
    try:
        config = TrainConfig(**values)
        config.hidden_dims = [int(h) for h in config.hidden_dims]
        return config.validate()
    except TypeError as e:
        raise InvalidArgumentError(f"malformed config value: {e}") from e
