"""
One-dimensional convolution primitives with odd kernels and same padding.

Both primitives use stride 1 and pad ``(kernel - 1) // 2`` on each side, so
the time axis keeps its length. Inputs are ``(batch, channels, time)``.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from lpad.core.base import Primitive
from lpad.core.decorators import primitive
from lpad.core.exceptions import ShapeError


@primitive("conv1d")
class Conv1d(Primitive):
    """Cross-correlation with weight ``(out_channels, in_channels, kernel)``."""

    def forward(self, x, weight, bias):
        self._validate_ndim(x, 3, "x")
        self._validate_ndim(weight, 3, "weight")
        self._validate_extent(x.shape[1], weight.shape[1], "input channels", x.shape)
        self._validate_extent(bias.shape[0], weight.shape[0], "bias length", bias.shape)
        kernel = weight.shape[2]
        if kernel % 2 == 0:
            raise ShapeError(self.name, f"kernel must be odd, got {kernel}", weight.shape)
        pad = (kernel - 1) // 2
        padded = np.pad(x, ((0, 0), (0, 0), (pad, pad)))
        windows = sliding_window_view(padded, kernel, axis=2)
        out = np.einsum("bctk,ock->bot", windows, weight) + bias[None, :, None]
        return out, (x.shape, windows, weight, pad)

    def vjp(self, saved, grad_out):
        x_shape, windows, weight, pad = saved
        length = x_shape[2]
        kernel = weight.shape[2]
        grad_bias = grad_out.sum(axis=(0, 2))
        grad_weight = np.einsum("bot,bctk->ock", grad_out, windows)
        grad_padded = np.zeros(
            (x_shape[0], x_shape[1], length + 2 * pad), dtype=grad_out.dtype
        )
        for k in range(kernel):
            grad_padded[:, :, k : k + length] += np.einsum(
                "bot,oc->bct", grad_out, weight[:, :, k]
            )
        grad_x = grad_padded[:, :, pad : pad + length]
        return grad_x, grad_weight, grad_bias


@primitive("conv_transpose1d")
class ConvTranspose1d(Primitive):
    """Transposed convolution with weight ``(in_channels, out_channels, kernel)``.

    This is the adjoint of :class:`Conv1d` with respect to its input, so a
    decoder built from it mirrors the encoder exactly.
    """

    def forward(self, x, weight, bias):
        self._validate_ndim(x, 3, "x")
        self._validate_ndim(weight, 3, "weight")
        self._validate_extent(x.shape[1], weight.shape[0], "input channels", x.shape)
        self._validate_extent(bias.shape[0], weight.shape[1], "bias length", bias.shape)
        kernel = weight.shape[2]
        if kernel % 2 == 0:
            raise ShapeError(self.name, f"kernel must be odd, got {kernel}", weight.shape)
        pad = (kernel - 1) // 2
        length = x.shape[2]
        full = np.zeros((x.shape[0], weight.shape[1], length + kernel - 1), dtype=x.dtype)
        for k in range(kernel):
            full[:, :, k : k + length] += np.einsum("bct,co->bot", x, weight[:, :, k])
        out = full[:, :, pad : pad + length] + bias[None, :, None]
        return out, (x, weight, pad)

    def vjp(self, saved, grad_out):
        x, weight, pad = saved
        length = x.shape[2]
        kernel = weight.shape[2]
        grad_full = np.zeros(
            (x.shape[0], weight.shape[1], length + kernel - 1), dtype=grad_out.dtype
        )
        grad_full[:, :, pad : pad + length] = grad_out
        grad_x = np.zeros_like(x)
        grad_weight = np.zeros_like(weight)
        for k in range(kernel):
            segment = grad_full[:, :, k : k + length]
            grad_x += np.einsum("bot,co->bct", segment, weight[:, :, k])
            grad_weight[:, :, k] = np.einsum("bct,bot->co", x, segment)
        grad_bias = grad_out.sum(axis=(0, 2))
        return grad_x, grad_weight, grad_bias


conv1d = Conv1d
conv_transpose1d = ConvTranspose1d
