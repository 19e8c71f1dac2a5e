"""
Batch normalization over the channel axis.

In training mode the primitive normalizes with the statistics of the current
batch (biased variance) and the wrapper :func:`batch_norm` folds them into the
running estimates. In evaluation mode the running estimates are used as
constants, so the output for one instance never depends on the rest of the
batch.
"""

import numpy as np

from lpad.core.base import Mode, Primitive
from lpad.core.decorators import primitive


def _reduction_axes(x: np.ndarray) -> tuple[int, ...]:
    return tuple(a for a in range(x.ndim) if a != 1)


def _broadcastable(vector: np.ndarray, ndim: int) -> np.ndarray:
    return vector.reshape((1, -1) + (1,) * (ndim - 2))


@primitive("batch_norm")
class BatchNorm(Primitive):
    """Normalizes ``x`` of shape ``(batch, channels[, time])`` per channel."""

    def forward(
        self,
        x,
        gamma,
        beta,
        mode: Mode = Mode.TRAIN,
        running_mean=None,
        running_var=None,
        eps: float = 1e-5,
    ):
        self._validate_ndim(x, (2, 3), "x")
        self._validate_extent(gamma.shape[0], x.shape[1], "gamma length", gamma.shape)
        axes = _reduction_axes(x)
        if Mode(mode) == Mode.TRAIN:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
        else:
            mean = running_mean
            var = running_var
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x - _broadcastable(mean, x.ndim)) * _broadcastable(inv_std, x.ndim)
        out = _broadcastable(gamma, x.ndim) * x_hat + _broadcastable(beta, x.ndim)
        return out, (Mode(mode), x_hat, inv_std, gamma, axes)

    def vjp(self, saved, grad_out):
        mode, x_hat, inv_std, gamma, axes = saved
        ndim = x_hat.ndim
        grad_gamma = (grad_out * x_hat).sum(axis=axes)
        grad_beta = grad_out.sum(axis=axes)
        grad_x_hat = grad_out * _broadcastable(gamma, ndim)
        if mode == Mode.EVAL:
            return grad_x_hat * _broadcastable(inv_std, ndim), grad_gamma, grad_beta
        count = x_hat.size // x_hat.shape[1]
        sum_grad = _broadcastable(grad_x_hat.sum(axis=axes), ndim)
        sum_grad_xhat = _broadcastable((grad_x_hat * x_hat).sum(axis=axes), ndim)
        grad_x = (
            _broadcastable(inv_std, ndim)
            / count
            * (count * grad_x_hat - sum_grad - x_hat * sum_grad_xhat)
        )
        return grad_x, grad_gamma, grad_beta


def batch_norm(
    x,
    gamma,
    beta,
    running_mean: np.ndarray,
    running_var: np.ndarray,
    mode: Mode = Mode.TRAIN,
    momentum: float = 0.1,
    eps: float = 1e-5,
):
    """Applies batch normalization and, in training mode, updates running stats.

    Args:
        x: Input tensor ``(batch, channels[, time])``.
        gamma: Scale parameter ``(channels,)``.
        beta: Shift parameter ``(channels,)``.
        running_mean (np.ndarray): Running mean, updated in place in training mode.
        running_var (np.ndarray): Running (unbiased) variance, updated in place.
        mode (Mode): Training uses batch statistics; evaluation uses the running ones.
        momentum (float): Weight of the current batch in the running update.
        eps (float): Variance floor.

    Returns:
        Tensor: The normalized tensor.
    """
    from lpad.diffcore.tensor import as_tensor

    x = as_tensor(x)
    out = BatchNorm(
        x,
        gamma,
        beta,
        mode=mode,
        running_mean=running_mean,
        running_var=running_var,
        eps=eps,
    )
    if Mode(mode) == Mode.TRAIN:
        axes = _reduction_axes(x.data)
        count = x.data.size // x.data.shape[1]
        batch_mean = x.data.mean(axis=axes)
        batch_var = x.data.var(axis=axes) * (count / max(count - 1, 1))
        running_mean *= 1.0 - momentum
        running_mean += momentum * batch_mean
        running_var *= 1.0 - momentum
        running_var += momentum * batch_var
    return out
