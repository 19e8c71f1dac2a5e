"""Model and training configuration."""

from enum import Enum
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from lpad.core.exceptions import ConfigurationError
from lpad.nets.config import DecoderOutput, HeadKind, NetConfig
from lpad.priors.bernoulli import KLMode
from lpad.rbm.prior import PositivePhaseKind, Topology, layer_sizes


class PriorKind(str, Enum):
    """Latent prior of the model.

    * GAUSSIAN: Standard normal.

    * BERNOULLI: Factorized Bernoulli(0.5).

    * RBM: Restricted Boltzmann machine trained by persistent contrastive
      divergence.
    """

    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    RBM = "rbm"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class ReconMetric(str, Enum):
    """Reconstruction error used in the loss and as the anomaly score."""

    MSE = "mse"
    BCE = "bce"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {metric.value for metric in cls}


class RbmSpec(BaseModel):
    """RBM prior settings.

    Attributes:
        topology (Topology): Wiring over the latent vector.
        chains (int): Number of persistent fantasy particles.
        sweeps (int): Gibbs sweeps per minibatch.
        positive_phase (PositivePhaseKind): Variable types of the augmented
            positive phase.
        replay_fraction (float): Share of chains re-randomized per update.
        l2_weight (float): Penalty on ``sum(W ** 2)``.
    """

    model_config = ConfigDict(frozen=True)

    topology: Topology = Topology.AUGMENTED_POSITIVE_PHASE
    chains: int = 500
    sweeps: int = 20
    positive_phase: PositivePhaseKind = PositivePhaseKind.CONTINUOUS_VISIBLE_DISCRETE_HIDDEN
    replay_fraction: float = 0.0
    l2_weight: float = 0.0

    @field_validator("chains")
    @classmethod
    def _validate_chains(cls, value: int) -> int:
        if value < 1:
            raise ConfigurationError(f"rbm.chains must be at least 1, got {value}")
        return value

    @field_validator("sweeps")
    @classmethod
    def _validate_sweeps(cls, value: int) -> int:
        if value < 0:
            raise ConfigurationError(f"rbm.sweeps must be non-negative, got {value}")
        return value

    @field_validator("replay_fraction")
    @classmethod
    def _validate_replay(cls, value: float) -> float:
        if not 0.0 <= value < 1.0:
            raise ConfigurationError(f"rbm.replay_fraction must lie in [0, 1), got {value}")
        return value

    @field_validator("l2_weight")
    @classmethod
    def _validate_l2(cls, value: float) -> float:
        if value < 0:
            raise ConfigurationError(f"rbm.l2_weight must be non-negative, got {value}")
        return value


class ModelSpec(BaseModel):
    """Everything needed to build a model.

    ``rbm`` is required exactly when ``prior_kind`` is ``rbm``; ``bce`` goes
    with a sigmoid decoder and ``mse`` with a linear one; the Gaussian prior
    uses the Gaussian head and the discrete priors the Bernoulli head.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    prior_kind: PriorKind
    net: NetConfig
    beta: float = 1.0
    lam: float = Field(default=0.1, alias="lambda")
    rbm: Optional[RbmSpec] = None
    recon_metric: ReconMetric = ReconMetric.MSE
    kl_mode: KLMode = KLMode.MC

    @field_validator("beta")
    @classmethod
    def _validate_beta(cls, value: float) -> float:
        if value < 0:
            raise ConfigurationError(f"beta must be non-negative, got {value}")
        return value

    @field_validator("lam")
    @classmethod
    def _validate_lambda(cls, value: float) -> float:
        if value <= 0:
            raise ConfigurationError(f"lambda must be positive, got {value}")
        return value

    @model_validator(mode="after")
    def _validate_consistency(self) -> "ModelSpec":
        if (self.rbm is not None) != (self.prior_kind == PriorKind.RBM):
            raise ConfigurationError(
                "rbm settings must be given if and only if prior_kind is 'rbm'"
            )
        sigmoid = self.net.decoder_output == DecoderOutput.SIGMOID
        if (self.recon_metric == ReconMetric.BCE) != sigmoid:
            raise ConfigurationError(
                "recon_metric 'bce' requires decoder_output 'sigmoid' and 'mse' requires 'linear'"
            )
        expected_head = (
            HeadKind.GAUSSIAN if self.prior_kind == PriorKind.GAUSSIAN else HeadKind.BERNOULLI
        )
        if self.net.head_kind != expected_head:
            raise ConfigurationError(
                f"prior_kind '{self.prior_kind.value}' requires head_kind '{expected_head.value}'"
            )
        if self.rbm is not None:
            layer_sizes(self.net.latent_dim, self.rbm.topology)
        return self


class TrainConfig(BaseModel):
    """Optimization settings.

    Attributes:
        epochs (int): Passes over the training set.
        minibatch (int): Instances per gradient step; the final partial
            minibatch of an epoch is dropped.
        lr (float): Adam step size.
        seed (int): Seed of every random stream used by training.
        adam_betas (tuple[float, float]): Adam moment decay rates.
        checkpoint_every (Optional[int]): Also checkpoint every N epochs.
    """

    model_config = ConfigDict(frozen=True)

    epochs: int = 400
    minibatch: int = 128
    lr: float = 3e-4
    seed: int = 0
    adam_betas: tuple[float, float] = (0.9, 0.999)
    checkpoint_every: Optional[int] = None

    @field_validator("epochs", "minibatch")
    @classmethod
    def _validate_counts(cls, value: int, info) -> int:
        if value < 1:
            raise ConfigurationError(f"{info.field_name} must be at least 1, got {value}")
        return value

    @field_validator("lr")
    @classmethod
    def _validate_lr(cls, value: float) -> float:
        if value <= 0:
            raise ConfigurationError(f"lr must be positive, got {value}")
        return value
