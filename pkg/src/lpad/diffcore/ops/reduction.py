"""
Sum and mean reductions.

Reductions go through ``np.add.reduce``, whose summation order depends only on
the array shape, so the same inputs always reduce to the same bits.
"""

import numpy as np

from lpad.core.base import Primitive
from lpad.core.decorators import primitive


def _normalize_axes(axis, ndim: int) -> tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(sorted(a % ndim for a in axis))


def _expand(grad_out: np.ndarray, shape: tuple[int, ...], axes, keepdims: bool):
    if not keepdims:
        for a in axes:
            grad_out = np.expand_dims(grad_out, a)
    return np.broadcast_to(grad_out, shape).copy()


@primitive("sum")
class Sum(Primitive):
    def forward(self, x, axis=None, keepdims: bool = False):
        axes = _normalize_axes(axis, x.ndim)
        out = np.add.reduce(x, axis=axes, keepdims=keepdims)
        return np.asarray(out), (x.shape, axes, keepdims)

    def vjp(self, saved, grad_out):
        shape, axes, keepdims = saved
        return (_expand(grad_out, shape, axes, keepdims),)


@primitive("mean")
class Mean(Primitive):
    def forward(self, x, axis=None, keepdims: bool = False):
        axes = _normalize_axes(axis, x.ndim)
        count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
        out = np.add.reduce(x, axis=axes, keepdims=keepdims) / count
        return np.asarray(out), (x.shape, axes, keepdims, count)

    def vjp(self, saved, grad_out):
        shape, axes, keepdims, count = saved
        return (_expand(grad_out, shape, axes, keepdims) / count,)


sum_ = Sum
mean = Mean
