"""
Dense tensors with reverse-mode gradient recording.

A :class:`Tensor` wraps a numpy array. Applying a registered primitive to
tensors that require gradients records a node (the primitive, its inputs and
its saved forward state); :meth:`Tensor.backward` then walks the recorded
nodes in reverse topological order and accumulates gradients into every leaf
that requires one.

The topological order is derived from node creation order, so gradient
accumulation is performed in the same sequence on every run and 64-bit
results are bit-for-bit reproducible.
"""

import contextlib
import itertools
from typing import Any, Iterator, Optional, Sequence, Union

import numpy as np

from lpad.core.exceptions import ShapeError, UsageError

ArrayLike = Union["Tensor", np.ndarray, float, int, Sequence]

_node_counter = itertools.count()
_grad_enabled = True
_default_dtype: np.dtype = np.dtype(np.float64)


def get_default_dtype() -> np.dtype:
    """Returns the floating dtype used for new tensors and parameters."""
    return _default_dtype


def set_default_dtype(dtype: Union[str, np.dtype, type]) -> None:
    """Sets the floating dtype used for new tensors and parameters.

    Args:
        dtype: ``float64`` (default, required for gradient checks) or
            ``float32``.

    Raises:
        UsageError: If ``dtype`` is not a supported floating type.
    """
    global _default_dtype
    resolved = np.dtype(dtype)
    if resolved not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise UsageError(f"Unsupported dtype '{resolved}'. Use float64 or float32.")
    _default_dtype = resolved


def is_grad_enabled() -> bool:
    return _grad_enabled


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Context manager that disables gradient recording."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


@contextlib.contextmanager
def enable_grad(enabled: bool = True) -> Iterator[None]:
    """Context manager that sets gradient recording to ``enabled``."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = enabled
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    """A dense real array that can take part in gradient recording.

    Args:
        data: Array-like payload. Integer and boolean payloads are converted to
            the default floating dtype.
        requires_grad (bool): Whether gradients should flow into this tensor.
        name (Optional[str]): Optional label used in error messages.
    """

    __array_priority__ = 100
    __array_ufunc__ = None

    def __init__(
        self, data: Any, requires_grad: bool = False, name: Optional[str] = None
    ):
        if isinstance(data, Tensor):
            data = data.data
        array = np.asarray(data)
        if array.dtype.kind != "f":
            array = array.astype(_default_dtype)
        self.data: np.ndarray = array
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self.name = name
        self._op = None
        self._inputs: tuple["Tensor", ...] = ()
        self._saved: Any = None
        self._id = next(_node_counter)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError("item", "only single-element tensors convert to float", self.shape)
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        """Returns a constant tensor sharing this tensor's payload."""
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        label = f", name='{self.name}'" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return len(self.data)

    # Arithmetic sugar over the registered primitives.

    def __add__(self, other: ArrayLike) -> "Tensor":
        from lpad.diffcore.ops.elementwise import add

        return add(self, other)

    def __radd__(self, other: ArrayLike) -> "Tensor":
        from lpad.diffcore.ops.elementwise import add

        return add(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        from lpad.diffcore.ops.elementwise import mul

        return mul(self, other)

    def __rmul__(self, other: ArrayLike) -> "Tensor":
        from lpad.diffcore.ops.elementwise import mul

        return mul(other, self)

    def __neg__(self) -> "Tensor":
        return self * -1.0

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return self + (-_as_tensor(other))

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return _as_tensor(other) + (-self)

    def __truediv__(self, other: Union[float, int]) -> "Tensor":
        if isinstance(other, Tensor):
            raise UsageError("Division is only supported by scalar constants.")
        return self * (1.0 / float(other))

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        from lpad.diffcore.ops.reduction import sum_

        return sum_(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        from lpad.diffcore.ops.reduction import mean

        return mean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape: int) -> "Tensor":
        from lpad.diffcore.ops.shape import reshape

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape=tuple(shape))

    def exp(self) -> "Tensor":
        from lpad.diffcore.ops.elementwise import exp

        return exp(self)

    def log(self) -> "Tensor":
        from lpad.diffcore.ops.elementwise import log

        return log(self)

    def backward(self, seed: Optional[ArrayLike] = None) -> None:
        """Accumulates gradients of this tensor into all reachable leaves.

        Args:
            seed: Gradient of the final objective with respect to this tensor.
                Defaults to ones, which is the usual choice for a scalar loss.

        Raises:
            UsageError: If this tensor was not produced by recorded operations.
            ShapeError: If the seed shape differs from this tensor's shape.
        """
        if not self.requires_grad:
            raise UsageError(
                "backward called on a tensor that does not require gradients; "
                "run the forward pass in train mode with parameters attached."
            )
        if seed is None:
            seed_array = np.ones_like(self.data)
        else:
            seed_array = np.asarray(_as_tensor(seed).data, dtype=self.data.dtype)
            if seed_array.shape != self.shape:
                raise ShapeError("backward", "seed shape must match output", seed_array.shape)

        order = _topological_order(self)
        grads: dict[int, np.ndarray] = {self._id: seed_array}
        for node in reversed(order):
            grad_out = grads.pop(node._id, None)
            if grad_out is None:
                continue
            if node._op is None:
                node.grad = grad_out.copy() if node.grad is None else node.grad + grad_out
                continue
            input_grads = node._op.vjp(node._saved, grad_out)
            for parent, grad in zip(node._inputs, input_grads):
                if grad is None or not parent.requires_grad:
                    continue
                if parent._id in grads:
                    grads[parent._id] = grads[parent._id] + grad
                else:
                    grads[parent._id] = grad


class Parameter(Tensor):
    """A trainable leaf tensor. Always requires gradients."""

    def __init__(self, data: Any, name: Optional[str] = None):
        array = np.array(data, dtype=_default_dtype, copy=True)
        super().__init__(array, requires_grad=True, name=name)

    def __repr__(self) -> str:
        return f"Parameter(shape={self.shape})"


def _as_tensor(value: ArrayLike) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def as_tensor(value: ArrayLike) -> Tensor:
    """Wraps an array-like as a constant tensor; tensors are returned unchanged."""
    return _as_tensor(value)


def _topological_order(root: Tensor) -> list[Tensor]:
    """Returns the recorded nodes reachable from ``root``, inputs first.

    Ties are broken by creation id, so the order depends only on the recorded
    graph and never on hash or memory layout.
    """
    visited: set[int] = set()
    order: list[Tensor] = []
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if node._id in visited:
            continue
        visited.add(node._id)
        stack.append((node, True))
        parents = sorted(
            (p for p in node._inputs if p.requires_grad and p._id not in visited),
            key=lambda p: p._id,
            reverse=True,
        )
        for parent in parents:
            stack.append((parent, False))
    return order
