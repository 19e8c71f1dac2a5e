"""
Decoder that inverts the encoder.

A linear layer maps the latent vector to the flattened size of the encoder
features; the result is split per branch and reshaped to
``(batch, filters, reduced_len)``. Each branch then mirrors its encoder
counterpart with ``upsample -> conv_transpose1d -> batch_norm -> relu`` blocks.
The last block of a branch has no normalization or activation and maps back to
``in_channels``. Branch outputs are summed and passed through the configured
output activation.
"""

from typing import Optional

import numpy as np

from lpad.core.base import Module
from lpad.core.exceptions import ShapeError
from lpad.diffcore.ops.elementwise import relu, sigmoid
from lpad.diffcore.ops.pooling import UpsampleMode, upsample1d
from lpad.diffcore.ops.shape import slice_axis
from lpad.diffcore.tensor import Tensor, as_tensor
from lpad.nets.config import BranchConfig, DecoderOutput, NetConfig
from lpad.nets.layers import BatchNorm1d, ConvTranspose1d, Linear, default_rng


class DeconvBlock(Module):
    def __init__(
        self,
        branch: BranchConfig,
        out_channels: int,
        upsample: UpsampleMode,
        rng: np.random.Generator,
        last: bool = False,
    ):
        super().__init__()
        self.conv = ConvTranspose1d(branch.filters, out_channels, branch.kernel, rng)
        self.norm = None if last else BatchNorm1d(out_channels)
        self.upsample = upsample

    def forward(self, x: Tensor) -> Tensor:
        x = self.conv(upsample1d(x, factor=2, mode=self.upsample))
        if self.norm is None:
            return x
        return relu(self.norm(x))


class DecoderBranch(Module):
    def __init__(self, cfg: NetConfig, branch: BranchConfig, rng: np.random.Generator):
        super().__init__()
        self.filters = branch.filters
        self.reduced_len = cfg.reduced_len
        inner = [
            DeconvBlock(branch, branch.filters, cfg.upsample, rng)
            for _ in range(cfg.blocks_per_branch - 1)
        ]
        final = DeconvBlock(branch, cfg.in_channels, cfg.upsample, rng, last=True)
        self.blocks = inner + [final]

    def forward(self, h: Tensor) -> Tensor:
        x = h.reshape(h.shape[0], self.filters, self.reduced_len)
        for block in self.blocks:
            x = block(x)
        return x


class Decoder(Module):
    """Maps ``(batch, latent_dim)`` to ``(batch, in_channels, window_len)``."""

    def __init__(self, cfg: NetConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = default_rng(rng, seed=1)
        self.cfg = cfg
        self.fc = Linear(cfg.latent_dim, cfg.feature_dim, rng)
        self.branches = [DecoderBranch(cfg, branch, rng) for branch in cfg.branches]

    def logits(self, z) -> Tensor:
        """Summed branch outputs before the output activation."""
        z = as_tensor(z)
        if z.ndim != 2 or z.shape[1] != self.cfg.latent_dim:
            raise ShapeError(
                "decode", f"latent batch must be (batch, {self.cfg.latent_dim})", z.shape
            )
        h = self.fc(z)
        out = None
        offset = 0
        for branch in self.branches:
            width = branch.filters * branch.reduced_len
            part = h if len(self.branches) == 1 else slice_axis(
                h, start=offset, stop=offset + width, axis=1
            )
            offset += width
            y = branch(part)
            out = y if out is None else out + y
        return out

    def activate(self, logits: Tensor) -> Tensor:
        if self.cfg.decoder_output == DecoderOutput.SIGMOID:
            return sigmoid(logits)
        return logits

    def forward(self, z) -> Tensor:
        return self.activate(self.logits(z))


def build_decoder(cfg: NetConfig, rng: Optional[np.random.Generator] = None) -> Decoder:
    """Builds the decoder paired with ``build_encoder(cfg)``."""
    return Decoder(cfg, rng)


def decode(net: Decoder, z) -> Tensor:
    return net(z)
