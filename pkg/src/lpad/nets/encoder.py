"""
Three-branch (by default) convolutional encoder.

Every branch applies ``blocks_per_branch`` blocks of
``conv1d -> batch_norm -> relu -> max_pool(2)`` with its own kernel size. The
branch outputs are flattened, concatenated and fed to the posterior head.
"""

import logging
from typing import Optional

import numpy as np

from lpad.core.base import Module
from lpad.core.exceptions import ShapeError
from lpad.diffcore.ops.elementwise import relu
from lpad.diffcore.ops.pooling import max_pool1d
from lpad.diffcore.ops.shape import concat
from lpad.diffcore.tensor import Tensor, as_tensor
from lpad.nets.config import BranchConfig, HeadKind, NetConfig
from lpad.nets.heads import BernoulliHead, GaussianHead, PosteriorHead
from lpad.nets.layers import BatchNorm1d, Conv1d, default_rng

logger = logging.getLogger(__name__)


class ConvBlock(Module):
    def __init__(self, in_channels: int, branch: BranchConfig, rng: np.random.Generator):
        super().__init__()
        self.conv = Conv1d(in_channels, branch.filters, branch.kernel, rng)
        self.norm = BatchNorm1d(branch.filters)

    def forward(self, x: Tensor) -> Tensor:
        return max_pool1d(relu(self.norm(self.conv(x))))


class EncoderBranch(Module):
    def __init__(self, cfg: NetConfig, branch: BranchConfig, rng: np.random.Generator):
        super().__init__()
        channels = [cfg.in_channels] + [branch.filters] * (cfg.blocks_per_branch - 1)
        self.blocks = [ConvBlock(c, branch, rng) for c in channels]

    def forward(self, x: Tensor) -> Tensor:
        for block in self.blocks:
            x = block(x)
        return x.reshape(x.shape[0], -1)


class Encoder(Module):
    """Maps ``(batch, in_channels, window_len)`` to a batch of posterior heads."""

    def __init__(self, cfg: NetConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = default_rng(rng)
        self.cfg = cfg
        self.branches = [EncoderBranch(cfg, branch, rng) for branch in cfg.branches]
        if cfg.head_kind == HeadKind.GAUSSIAN:
            self.head = GaussianHead(
                cfg.feature_dim, cfg.latent_dim, rng, logvar_softplus=cfg.logvar_softplus
            )
        else:
            self.head = BernoulliHead(cfg.feature_dim, cfg.latent_dim, rng)

    def forward(self, x) -> PosteriorHead:
        x = as_tensor(x)
        expected = (self.cfg.in_channels, self.cfg.window_len)
        if x.ndim != 3 or x.shape[1:] != expected:
            raise ShapeError(
                "encode", f"input must be (batch, {expected[0]}, {expected[1]})", x.shape
            )
        features = [branch(x) for branch in self.branches]
        joined = features[0] if len(features) == 1 else concat(*features, axis=1)
        return self.head(joined)


def build_encoder(cfg: NetConfig, rng: Optional[np.random.Generator] = None) -> Encoder:
    """Builds the encoder described by ``cfg``.

    Args:
        cfg (NetConfig): A validated network configuration.
        rng (Optional[np.random.Generator]): Source of initial weights.
            Defaults to a generator seeded with 0.
    """
    encoder = Encoder(cfg, rng)
    logger.debug(
        "Built encoder: %d branches, feature_dim=%d, head=%s",
        len(cfg.branches),
        cfg.feature_dim,
        cfg.head_kind.value,
    )
    return encoder


def encode(net: Encoder, x) -> PosteriorHead:
    return net(x)
