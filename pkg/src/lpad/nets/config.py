"""
Network configuration, parameter counting, and window padding.

:class:`NetConfig` fully determines the shapes of the encoder and decoder, so
:func:`parameter_count` can be computed without building either network.
"""

from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from lpad.core.exceptions import ConfigurationError, ShapeError
from lpad.diffcore.ops.pooling import UpsampleMode


class HeadKind(str, Enum):
    """Posterior head attached to the encoder.

    * GAUSSIAN: Mean and log-variance vectors.

    * BERNOULLI: One log-odds vector (also used by the RBM prior).
    """

    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class DecoderOutput(str, Enum):
    """Activation applied to the summed decoder branches.

    * LINEAR: Identity, for z-scored data.

    * SIGMOID: Logistic, for data min-max normalized to ``[0, 1]``.
    """

    LINEAR = "linear"
    SIGMOID = "sigmoid"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class BranchConfig(BaseModel):
    """One convolutional branch: ``filters`` output channels and an odd ``kernel``."""

    model_config = ConfigDict(frozen=True)

    filters: int
    kernel: int

    @model_validator(mode="before")
    @classmethod
    def _from_pair(cls, value: Any) -> Any:
        if isinstance(value, (tuple, list)) and len(value) == 2:
            return {"filters": value[0], "kernel": value[1]}
        return value

    @field_validator("filters")
    @classmethod
    def _validate_filters(cls, value: int) -> int:
        if value <= 0:
            raise ConfigurationError(f"branches.filters must be positive, got {value}")
        return value

    @field_validator("kernel")
    @classmethod
    def _validate_kernel(cls, value: int) -> int:
        if value <= 0 or value % 2 == 0:
            raise ConfigurationError(
                f"branches.kernel must be a positive odd number (same padding), got {value}"
            )
        return value


DEFAULT_BRANCHES = tuple(BranchConfig(filters=32, kernel=k) for k in (3, 5, 7))


class NetConfig(BaseModel):
    """Shape configuration shared by the encoder and the decoder.

    Attributes:
        in_channels (int): Channels of each instance.
        window_len (int): Time steps seen by the network. Must be divisible by
            ``2 ** blocks_per_branch``; shorter data windows are padded with
            :func:`pad_window`.
        branches (tuple[BranchConfig, ...]): Parallel convolutional branches.
        blocks_per_branch (int): Conv/BN/ReLU/pool blocks in every branch.
        latent_dim (int): Size of the latent vector.
        head_kind (HeadKind): Gaussian or Bernoulli posterior head.
        decoder_output (DecoderOutput): Final decoder activation.
        logvar_softplus (bool): Route the Gaussian log-variance through a
            softplus, which keeps it non-negative.
        upsample (UpsampleMode): Interpolation used by the decoder.
    """

    model_config = ConfigDict(frozen=True)

    in_channels: int
    window_len: int
    branches: tuple[BranchConfig, ...] = DEFAULT_BRANCHES
    blocks_per_branch: int = 2
    latent_dim: int
    head_kind: HeadKind = HeadKind.GAUSSIAN
    decoder_output: DecoderOutput = DecoderOutput.LINEAR
    logvar_softplus: bool = True
    upsample: UpsampleMode = UpsampleMode.LINEAR

    @field_validator("in_channels", "window_len", "blocks_per_branch", "latent_dim")
    @classmethod
    def _validate_positive(cls, value: int, info) -> int:
        if value <= 0:
            raise ConfigurationError(f"{info.field_name} must be positive, got {value}")
        return value

    @field_validator("branches")
    @classmethod
    def _validate_branches(cls, value: tuple[BranchConfig, ...]) -> tuple[BranchConfig, ...]:
        if not value:
            raise ConfigurationError("branches must contain at least one branch")
        return value

    @model_validator(mode="after")
    def _validate_window(self) -> "NetConfig":
        factor = 2**self.blocks_per_branch
        if self.window_len % factor:
            raise ConfigurationError(
                f"window_len must be divisible by 2**blocks_per_branch={factor}, "
                f"got {self.window_len}; pad to {padded_length(self.window_len, self.blocks_per_branch)}"
            )
        return self

    @property
    def reduced_len(self) -> int:
        """Time steps left after all pooling blocks."""
        return self.window_len // 2**self.blocks_per_branch

    @property
    def feature_dim(self) -> int:
        """Length of the flattened, concatenated branch outputs."""
        return sum(branch.filters for branch in self.branches) * self.reduced_len


def padded_length(window_len: int, blocks_per_branch: int) -> int:
    """Smallest multiple of ``2 ** blocks_per_branch`` that is ``>= window_len``."""
    factor = 2**blocks_per_branch
    return -(-window_len // factor) * factor


def pad_window(x: np.ndarray, target_len: int) -> np.ndarray:
    """Right-pads the time axis to ``target_len`` by repeating the last value."""
    length = x.shape[-1]
    if length > target_len:
        raise ShapeError("pad_window", f"window longer than target {target_len}", x.shape)
    if length == target_len:
        return x
    widths = [(0, 0)] * (x.ndim - 1) + [(0, target_len - length)]
    return np.pad(x, widths, mode="edge")


def crop_window(x, length: int):
    """Keeps the first ``length`` time steps of an array or tensor."""
    from lpad.diffcore.ops.shape import slice_axis
    from lpad.diffcore.tensor import Tensor

    if x.shape[-1] == length:
        return x
    if isinstance(x, Tensor):
        return slice_axis(x, start=0, stop=length, axis=-1)
    return x[..., :length]


def parameter_count(cfg: NetConfig) -> int:
    """Number of trainable values in the encoder plus the decoder.

    With ``C`` input channels, ``B`` blocks, latent size ``L``, flattened
    feature size ``D`` and, per branch, ``F`` filters of kernel ``K``:

    * encoder branch: ``(F C K + F + 2F) + (B - 1)(F F K + F + 2F)``
    * head: ``D L + L``, twice for the Gaussian head
    * decoder input layer: ``L D + D``
    * decoder branch: ``(B - 1)(F F K + F + 2F) + (F C K + C)``
    """
    channels, blocks, latent = cfg.in_channels, cfg.blocks_per_branch, cfg.latent_dim
    total = 0
    for branch in cfg.branches:
        f, k = branch.filters, branch.kernel
        inner = f * f * k + f + 2 * f
        total += (f * channels * k + 3 * f) + (blocks - 1) * inner
        total += (blocks - 1) * inner + (f * channels * k + channels)
    heads = 2 if cfg.head_kind == HeadKind.GAUSSIAN else 1
    total += heads * (cfg.feature_dim * latent + latent)
    total += latent * cfg.feature_dim + cfg.feature_dim
    return total
