from typing import Callable, Optional

import numpy as np

from lpad.core.base import Primitive
from lpad.core.exceptions import ConfigurationError

_OPSET: dict[str, Primitive] = {}


def register_primitive(instance: Primitive) -> Primitive:
    """Adds a primitive instance to the op set under its ``name``.

    Raises:
        ConfigurationError: If the name is empty or already registered.
    """
    if not instance.name:
        raise ConfigurationError(
            f"Primitive '{type(instance).__name__}' is missing a 'name'."
        )
    if instance.name in _OPSET:
        raise ConfigurationError(f"Primitive '{instance.name}' is already registered.")
    _OPSET[instance.name] = instance
    return instance


def registered_primitives() -> dict[str, Primitive]:
    """Returns a copy of the op set, keyed by primitive name."""
    return dict(_OPSET)


def primitive(name: str) -> Callable[[type[Primitive]], Primitive]:
    """
    Class decorator that instantiates a Primitive subclass and registers it.

    The decorated name is bound to the registered *instance*, so the result can
    be called directly on tensors.

    Args:
        name (str): Unique op-set name of the primitive.
    """

    def decorator(cls: type[Primitive]) -> Primitive:
        cls.name = name
        return register_primitive(cls())

    return decorator


def elementwise(
    name: str,
    derivative: Callable[[np.ndarray, np.ndarray], np.ndarray],
    doc: Optional[str] = None,
) -> Callable[[Callable[[np.ndarray], np.ndarray]], Primitive]:
    """
    Decorator to create a unary elementwise Primitive from a numpy function.

    Args:
        name (str): Unique op-set name of the primitive.
        derivative (Callable): ``derivative(x, y)`` returning dy/dx elementwise,
            given the input ``x`` and the forward output ``y``.
        doc (Optional[str]): Docstring for the resulting primitive.
    """

    def decorator(func: Callable[[np.ndarray], np.ndarray]) -> Primitive:
        class _Elementwise(Primitive):
            def forward(self, x):
                y = func(x)
                return y, (x, y)

            def vjp(self, saved, grad_out):
                x, y = saved
                return (grad_out * derivative(x, y),)

        _Elementwise.__name__ = func.__name__
        _Elementwise.__doc__ = doc or func.__doc__
        _Elementwise.name = name
        return register_primitive(_Elementwise())

    return decorator
