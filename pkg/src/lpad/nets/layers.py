"""
Parameterized layers built on the diffcore primitives.

Weights are drawn from ``U(-1/sqrt(fan_in), 1/sqrt(fan_in))`` with a caller
supplied generator; biases start at zero.
"""

from typing import Optional

import numpy as np

from lpad.core.base import Module
from lpad.diffcore.ops.conv import conv1d, conv_transpose1d
from lpad.diffcore.ops.linear import linear
from lpad.diffcore.ops.normalization import batch_norm
from lpad.diffcore.tensor import Parameter, get_default_dtype


def _uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Module):
    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.weight = Parameter(_uniform(rng, (out_features, in_features), in_features))
        self.bias = Parameter(np.zeros(out_features))

    def forward(self, x):
        return linear(x, self.weight, self.bias)


class Conv1d(Module):
    def __init__(
        self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator
    ):
        super().__init__()
        self.weight = Parameter(
            _uniform(rng, (out_channels, in_channels, kernel), in_channels * kernel)
        )
        self.bias = Parameter(np.zeros(out_channels))

    def forward(self, x):
        return conv1d(x, self.weight, self.bias)


class ConvTranspose1d(Module):
    def __init__(
        self, in_channels: int, out_channels: int, kernel: int, rng: np.random.Generator
    ):
        super().__init__()
        self.weight = Parameter(
            _uniform(rng, (in_channels, out_channels, kernel), in_channels * kernel)
        )
        self.bias = Parameter(np.zeros(out_channels))

    def forward(self, x):
        return conv_transpose1d(x, self.weight, self.bias)


class BatchNorm1d(Module):
    """Per-channel batch normalization with running statistics.

    Running statistics change only when the module is in train mode.
    """

    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.gamma = Parameter(np.ones(channels))
        self.beta = Parameter(np.zeros(channels))
        self.momentum = momentum
        self.eps = eps
        dtype = get_default_dtype()
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x):
        return batch_norm(
            x,
            self.gamma,
            self.beta,
            self.get_buffer("running_mean"),
            self.get_buffer("running_var"),
            mode=self.mode,
            momentum=self.momentum,
            eps=self.eps,
        )


def default_rng(rng: Optional[np.random.Generator], seed: int = 0) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng(seed)
