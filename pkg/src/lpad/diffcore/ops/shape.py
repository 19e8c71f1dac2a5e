"""Structural primitives: channel concatenation, reshape and contiguous slicing."""

import numpy as np

from lpad.core.base import Primitive
from lpad.core.decorators import primitive
from lpad.core.exceptions import ShapeError


@primitive("concat")
class Concat(Primitive):
    """Concatenates any number of tensors along ``axis`` (default: channels)."""

    def forward(self, *arrays, axis: int = 1):
        if not arrays:
            raise ShapeError(self.name, "needs at least one input")
        reference = arrays[0].shape
        for array in arrays[1:]:
            if array.ndim != len(reference) or any(
                a != b for i, (a, b) in enumerate(zip(array.shape, reference)) if i != axis % len(reference)
            ):
                raise ShapeError(
                    self.name,
                    f"all inputs must agree outside axis {axis}",
                    [a.shape for a in arrays],
                )
        sizes = [a.shape[axis] for a in arrays]
        return np.concatenate(arrays, axis=axis), (sizes, axis)

    def vjp(self, saved, grad_out):
        sizes, axis = saved
        return tuple(np.split(grad_out, np.cumsum(sizes)[:-1], axis=axis))


@primitive("reshape")
class Reshape(Primitive):
    def forward(self, x, shape: tuple[int, ...]):
        try:
            out = x.reshape(shape)
        except ValueError:
            raise ShapeError(self.name, f"cannot reshape to {shape}", x.shape)
        return out, x.shape

    def vjp(self, saved, grad_out):
        return (grad_out.reshape(saved),)


@primitive("slice")
class Slice(Primitive):
    """Selects ``[start, stop)`` along one axis."""

    def forward(self, x, start: int, stop: int, axis: int = -1):
        extent = x.shape[axis]
        if not 0 <= start < stop <= extent:
            raise ShapeError(
                self.name, f"range [{start}, {stop}) outside axis of extent {extent}", x.shape
            )
        index = [slice(None)] * x.ndim
        index[axis] = slice(start, stop)
        return x[tuple(index)], (x.shape, tuple(index))

    def vjp(self, saved, grad_out):
        shape, index = saved
        grad = np.zeros(shape, dtype=grad_out.dtype)
        grad[index] = grad_out
        return (grad,)


concat = Concat
reshape = Reshape
slice_axis = Slice
