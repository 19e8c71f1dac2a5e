"""
Core abstract base classes for the differentiable computation layer.

This module provides the two building blocks everything else in ``lpad`` is
made of:

* :class:`Primitive`: a single differentiable operation over dense arrays
  with a forward rule and an adjoint (vector-Jacobian product). Concrete
  primitives live in ``lpad.diffcore.ops`` and are registered in the op set
  with the ``primitive`` / ``elementwise`` decorators.
* :class:`Module`: a stateful network component that owns named parameters
  and buffers (e.g. batch-norm running statistics) and switches between
  training and evaluation mode.

End users should rarely subclass these directly; the encoder, decoder and
RBM prior in ``lpad.nets`` and ``lpad.rbm`` are the intended consumers.
"""

import abc
from enum import Enum
from typing import TYPE_CHECKING, Any, Iterator, Optional, Sequence

import numpy as np

from lpad.core.exceptions import NonFiniteError, ShapeError

if TYPE_CHECKING:
    from lpad.diffcore.tensor import Parameter, Tensor


class Mode(str, Enum):
    """Execution mode of a computation.

    * TRAIN: batch statistics, relaxed latent samples, gradients recorded.

    * EVAL: running statistics, hard latent samples, nothing recorded and
      no state mutated.
    """

    TRAIN = "train"
    EVAL = "eval"

    @classmethod
    def get_all_values(cls) -> set[str]:
        """Return all available mode values.

        Returns:
            set[str]: Set of all mode string values.
        """
        return {mode.value for mode in cls}


class Primitive(abc.ABC):
    """
    Abstract base class for a differentiable primitive operation.

    A primitive maps one or more numpy arrays to a single output array. Its
    ``forward`` returns the output together with whatever it needs to save for
    the backward pass, and its ``vjp`` maps the gradient of the output back to
    one gradient per input (``None`` for inputs that are not differentiable).

    Calling a primitive on :class:`~lpad.diffcore.tensor.Tensor` inputs runs
    ``forward``, checks that the result is finite and, when gradient recording
    is enabled and any input requires a gradient, records the node so that
    ``Tensor.backward`` can later replay the adjoints.

    Example subclass:
        .. code-block:: python

            @primitive("square")
            class Square(Primitive):
                def forward(self, x):
                    return x * x, x

                def vjp(self, saved, grad_out):
                    return (2.0 * saved * grad_out,)
    """

    name: str = ""

    @abc.abstractmethod
    def forward(self, *arrays: np.ndarray, **attrs: Any) -> tuple[np.ndarray, Any]:
        """Computes the output of the primitive.

        Args:
            *arrays (np.ndarray): Input arrays, in the primitive's declared order.
            **attrs: Non-differentiable attributes (axes, sizes, modes).

        Returns:
            A pair ``(output, saved)`` where ``saved`` is handed back to
            :meth:`vjp` unchanged.

        Raises:
            ShapeError: If the input extents are incompatible.
        """
        raise NotImplementedError

    @abc.abstractmethod
    def vjp(
        self, saved: Any, grad_out: np.ndarray
    ) -> tuple[Optional[np.ndarray], ...]:
        """Maps the output gradient to one gradient per input.

        Args:
            saved: The second element returned by :meth:`forward`.
            grad_out (np.ndarray): Gradient of the final scalar with respect to
                this primitive's output.

        Returns:
            A tuple with one entry per input: the input gradient with the
            input's exact shape, or ``None`` if the input is not differentiable.
        """
        raise NotImplementedError

    def __call__(self, *inputs: Any, **attrs: Any) -> "Tensor":
        """Applies the primitive to tensors (or array-likes) and records the node.

        Args:
            *inputs: Tensors or array-likes. Array-likes are wrapped as constants.
            **attrs: Forwarded to :meth:`forward`.

        Returns:
            Tensor: The output tensor.

        Raises:
            NonFiniteError: If the output contains NaN or infinity.
        """
        from lpad.diffcore.tensor import Tensor, is_grad_enabled

        tensors = tuple(t if isinstance(t, Tensor) else Tensor(t) for t in inputs)
        out_data, saved = self.forward(*(t.data for t in tensors), **attrs)
        self._validate_finite(out_data)
        needs_grad = is_grad_enabled() and any(t.requires_grad for t in tensors)
        out = Tensor(out_data, requires_grad=needs_grad)
        if needs_grad:
            out._op = self
            out._inputs = tensors
            out._saved = saved
        return out

    def _validate_ndim(
        self, array: np.ndarray, ndim: int | Sequence[int], what: str
    ) -> None:
        """Validates the rank of an input array.

        Args:
            array (np.ndarray): The array to check.
            ndim (int | Sequence[int]): Accepted rank or ranks.
            what (str): Name of the argument, used in the error message.

        Raises:
            ShapeError: If the rank is not accepted.
        """
        accepted = (ndim,) if isinstance(ndim, int) else tuple(ndim)
        if array.ndim not in accepted:
            raise ShapeError(
                self.name,
                f"{what} must have rank {' or '.join(map(str, accepted))}, "
                f"got rank {array.ndim}",
                array.shape,
            )

    def _validate_extent(
        self, actual: int, expected: int, what: str, shape: Sequence[int]
    ) -> None:
        """Validates that one axis has the expected extent.

        Raises:
            ShapeError: If ``actual != expected``.
        """
        if actual != expected:
            raise ShapeError(
                self.name, f"{what} must be {expected}, got {actual}", shape
            )

    def _validate_finite(self, array: np.ndarray) -> None:
        """Validates that every value of a forward result is finite.

        Raises:
            NonFiniteError: Naming this primitive and the first offending
                flat index.
        """
        finite = np.isfinite(array)
        if not finite.all():
            index = int(np.flatnonzero(~finite)[0])
            raise NonFiniteError(
                f"{self.name}: non-finite output at flat index {index}",
                index=index,
                term=self.name,
            )


class Module(abc.ABC):
    """
    Abstract base class for a network component with named parameters.

    Parameters are discovered from instance attributes in definition order:
    :class:`~lpad.diffcore.tensor.Parameter` attributes, child modules, and
    lists of child modules. Names are dotted paths (``branches.0.conv.weight``),
    which makes them stable across runs and suitable as checkpoint keys.

    Buffers hold non-trainable state such as batch-norm running statistics;
    they are registered with :meth:`register_buffer`.

    Example subclass:
        .. code-block:: python

            class Scale(Module):
                def __init__(self):
                    super().__init__()
                    self.weight = Parameter(np.ones(3))

                def forward(self, x):
                    return x * self.weight
    """

    def __init__(self) -> None:
        self._buffers: dict[str, np.ndarray] = {}
        self.mode = Mode.TRAIN

    @abc.abstractmethod
    def forward(self, *args: Any, **kwargs: Any) -> Any:
        """Computes the module output."""
        raise NotImplementedError

    def __call__(self, *args: Any, **kwargs: Any) -> Any:
        return self.forward(*args, **kwargs)

    @property
    def training(self) -> bool:
        return self.mode == Mode.TRAIN

    def set_mode(self, mode: Mode) -> "Module":
        """Sets the execution mode on this module and all its children.

        Args:
            mode (Mode): ``Mode.TRAIN`` or ``Mode.EVAL``.

        Returns:
            Module: ``self``, for chaining.
        """
        self.mode = Mode(mode)
        for _, child in self.named_children():
            child.set_mode(mode)
        return self

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        """Registers a non-trainable array that is saved in checkpoints."""
        self._buffers[name] = value

    def get_buffer(self, name: str) -> np.ndarray:
        return self._buffers[name]

    def named_children(self) -> Iterator[tuple[str, "Module"]]:
        """Yields ``(name, child)`` pairs in attribute definition order."""
        for attr_name, value in vars(self).items():
            if isinstance(value, Module):
                yield attr_name, value
            elif isinstance(value, (list, tuple)):
                for index, item in enumerate(value):
                    if isinstance(item, Module):
                        yield f"{attr_name}.{index}", item

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, "Parameter"]]:
        """Yields ``(dotted_name, parameter)`` pairs in a stable order."""
        from lpad.diffcore.tensor import Parameter

        for attr_name, value in vars(self).items():
            if isinstance(value, Parameter):
                yield f"{prefix}{attr_name}", value
        for child_name, child in self.named_children():
            yield from child.named_parameters(prefix=f"{prefix}{child_name}.")

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        """Yields ``(dotted_name, buffer)`` pairs in a stable order."""
        for name, value in self._buffers.items():
            yield f"{prefix}{name}", value
        for child_name, child in self.named_children():
            yield from child.named_buffers(prefix=f"{prefix}{child_name}.")

    def load_buffers(self, buffers: dict[str, np.ndarray], prefix: str = "") -> None:
        """Copies buffer values in place from a ``named_buffers``-style mapping."""
        for name in list(self._buffers):
            key = f"{prefix}{name}"
            if key in buffers:
                self._buffers[name][...] = buffers[key]
        for child_name, child in self.named_children():
            child.load_buffers(buffers, prefix=f"{prefix}{child_name}.")
