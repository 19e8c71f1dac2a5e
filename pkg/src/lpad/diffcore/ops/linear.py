import numpy as np

from lpad.core.base import Primitive
from lpad.core.decorators import primitive


@primitive("linear")
class Linear(Primitive):
    """Affine map ``y = x @ weight.T + bias`` over the last axis of ``x``.

    ``weight`` has shape ``(out_features, in_features)`` and ``bias`` shape
    ``(out_features,)``; any number of leading batch axes is allowed.
    """

    def forward(self, x, weight, bias):
        self._validate_ndim(weight, 2, "weight")
        self._validate_ndim(bias, 1, "bias")
        self._validate_ndim(x, (1, 2, 3), "x")
        self._validate_extent(x.shape[-1], weight.shape[1], "last axis of x", x.shape)
        self._validate_extent(bias.shape[0], weight.shape[0], "bias length", bias.shape)
        return x @ weight.T + bias, (x, weight)

    def vjp(self, saved, grad_out):
        x, weight = saved
        grad_x = grad_out @ weight
        flat_grad = grad_out.reshape(-1, weight.shape[0])
        flat_x = x.reshape(-1, weight.shape[1])
        grad_weight = flat_grad.T @ flat_x
        grad_bias = flat_grad.sum(axis=0)
        return grad_x, grad_weight, grad_bias


def linear(x, weight, bias=None):
    """Applies the affine primitive; a missing bias is a constant zero vector."""
    from lpad.diffcore.tensor import as_tensor

    weight = as_tensor(weight)
    if bias is None:
        bias = np.zeros(weight.shape[0], dtype=weight.data.dtype)
    return Linear(x, weight, bias)
