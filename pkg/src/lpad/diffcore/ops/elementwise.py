"""Elementwise primitives: activations, add/mul with broadcasting, log/exp, clamp."""

import numpy as np
from scipy.special import expit

from lpad.core.base import Primitive
from lpad.core.decorators import elementwise, primitive
from lpad.core.exceptions import ShapeError


def unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sums a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


@elementwise("relu", derivative=lambda x, y: (x > 0).astype(x.dtype))
def relu(x):
    """Rectified linear unit, max(x, 0). The derivative at 0 is taken as 0."""
    return np.maximum(x, 0.0)


@elementwise("softplus", derivative=lambda x, y: expit(x))
def softplus(x):
    """log(1 + e^x), evaluated without overflow."""
    return np.logaddexp(0.0, x)


@elementwise("sigmoid", derivative=lambda x, y: y * (1.0 - y))
def sigmoid(x):
    """Logistic function 1 / (1 + e^-x)."""
    return expit(x)


@elementwise("log", derivative=lambda x, y: 1.0 / x)
def log(x):
    """Natural logarithm."""
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.log(x)


@elementwise("exp", derivative=lambda x, y: y)
def exp(x):
    """Exponential."""
    with np.errstate(over="ignore"):
        return np.exp(x)


def _broadcast_shape(op: str, a: np.ndarray, b: np.ndarray) -> tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(op, "operands cannot be broadcast together", (a.shape, b.shape))


@primitive("add")
class Add(Primitive):
    """Elementwise sum with numpy broadcasting."""

    def forward(self, a, b):
        _broadcast_shape(self.name, a, b)
        return a + b, (a.shape, b.shape)

    def vjp(self, saved, grad_out):
        a_shape, b_shape = saved
        return unbroadcast(grad_out, a_shape), unbroadcast(grad_out, b_shape)


@primitive("mul")
class Mul(Primitive):
    """Elementwise product with numpy broadcasting."""

    def forward(self, a, b):
        _broadcast_shape(self.name, a, b)
        return a * b, (a, b)

    def vjp(self, saved, grad_out):
        a, b = saved
        return unbroadcast(grad_out * b, a.shape), unbroadcast(grad_out * a, b.shape)


@primitive("clamp")
class Clamp(Primitive):
    """Clips values to ``[low, high]``; the gradient is zero outside the bounds."""

    def forward(self, x, low: float, high: float):
        inside = (x >= low) & (x <= high)
        return np.clip(x, low, high), inside

    def vjp(self, saved, grad_out):
        return (grad_out * saved,)


add = Add
mul = Mul
clamp = Clamp


def log_sigmoid(x):
    """log sigmoid(x) computed as -softplus(-x)."""
    return -softplus(-x)
