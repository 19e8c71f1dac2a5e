"""Max-pooling and upsampling along the last (time) axis."""

from enum import Enum

import numpy as np

from lpad.core.base import Primitive
from lpad.core.decorators import primitive
from lpad.core.exceptions import ShapeError


class UpsampleMode(str, Enum):
    """Interpolation used by :func:`upsample1d`.

    * LINEAR: Linear interpolation between neighbouring samples (half-pixel
      centres, edges clamped).

    * NEAREST: Each sample repeated ``factor`` times.
    """

    LINEAR = "linear"
    NEAREST = "nearest"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {mode.value for mode in cls}


@primitive("max_pool1d")
class MaxPool1d(Primitive):
    """Non-overlapping max-pooling of size 2 over the last axis.

    On ties the first maximal element receives the gradient.
    """

    size = 2

    def forward(self, x):
        length = x.shape[-1]
        if length % self.size:
            raise ShapeError(
                self.name, f"last axis must be divisible by {self.size}", x.shape
            )
        grouped = x.reshape(*x.shape[:-1], length // self.size, self.size)
        index = np.argmax(grouped, axis=-1)[..., None]
        out = np.take_along_axis(grouped, index, axis=-1)[..., 0]
        return out, (x.shape, index)

    def vjp(self, saved, grad_out):
        shape, index = saved
        grad = np.zeros((*shape[:-1], shape[-1] // self.size, self.size), dtype=grad_out.dtype)
        np.put_along_axis(grad, index, grad_out[..., None], axis=-1)
        return (grad.reshape(shape),)


def _linear_interpolation_matrix(length: int, factor: int, dtype) -> np.ndarray:
    out_length = length * factor
    source = (np.arange(out_length) + 0.5) / factor - 0.5
    source = np.clip(source, 0.0, length - 1)
    low = np.floor(source).astype(int)
    high = np.minimum(low + 1, length - 1)
    weight_high = source - low
    matrix = np.zeros((out_length, length), dtype=dtype)
    rows = np.arange(out_length)
    np.add.at(matrix, (rows, low), 1.0 - weight_high)
    np.add.at(matrix, (rows, high), weight_high)
    return matrix


@primitive("upsample1d")
class Upsample1d(Primitive):
    """Upsampling by an integer factor (default 2) over the last axis."""

    def forward(self, x, factor: int = 2, mode: UpsampleMode = UpsampleMode.LINEAR):
        mode = UpsampleMode(mode)
        if mode == UpsampleMode.NEAREST:
            return np.repeat(x, factor, axis=-1), (mode, factor, None)
        matrix = _linear_interpolation_matrix(x.shape[-1], factor, x.dtype)
        return x @ matrix.T, (mode, factor, matrix)

    def vjp(self, saved, grad_out):
        mode, factor, matrix = saved
        if mode == UpsampleMode.NEAREST:
            grouped = grad_out.reshape(*grad_out.shape[:-1], -1, factor)
            return (grouped.sum(axis=-1),)
        return (grad_out @ matrix,)


max_pool1d = MaxPool1d
upsample1d = Upsample1d
