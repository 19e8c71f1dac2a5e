"""Named parameter collections and the Adam optimizer."""

from typing import Iterable, Iterator, Optional

import numpy as np

from lpad.core.base import Module
from lpad.core.exceptions import ConfigurationError
from lpad.diffcore.tensor import Parameter


class ParamStore:
    """An ordered, uniquely named set of parameters.

    Args:
        named (Iterable[tuple[str, Parameter]]): ``(name, parameter)`` pairs.

    Raises:
        ConfigurationError: If a name occurs twice.
    """

    def __init__(self, named: Iterable[tuple[str, Parameter]] = ()):
        self._params: dict[str, Parameter] = {}
        for name, param in named:
            self.add(name, param)

    @classmethod
    def from_modules(cls, **modules: Optional[Module]) -> "ParamStore":
        """Collects parameters of several modules under ``<key>.<name>`` names."""
        store = cls()
        for key, module in modules.items():
            if module is None:
                continue
            for name, param in module.named_parameters(prefix=f"{key}."):
                store.add(name, param)
        return store

    def add(self, name: str, param: Parameter) -> None:
        if name in self._params:
            raise ConfigurationError(f"Duplicate parameter name '{name}'.")
        self._params[name] = param

    def __getitem__(self, name: str) -> Parameter:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def zero_grad(self) -> None:
        for param in self._params.values():
            param.zero_grad()

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: param.data.copy() for name, param in self._params.items()}

    def load_state_dict(self, values: dict[str, np.ndarray]) -> None:
        """Copies values in place. Every stored name must be present."""
        missing = [name for name in self._params if name not in values]
        if missing:
            raise ConfigurationError(f"Missing parameter values: {', '.join(missing)}.")
        for name, param in self._params.items():
            value = np.asarray(values[name], dtype=param.data.dtype)
            if value.shape != param.shape:
                raise ConfigurationError(
                    f"Parameter '{name}' has shape {param.shape}, got {value.shape}."
                )
            param.data[...] = value

    def num_values(self) -> int:
        return int(sum(param.size for param in self._params.values()))


class Adam:
    """Adam with bias-corrected first and second moment estimates.

    Moment accumulators mirror the shapes of the parameters in the store.
    Parameters without a gradient in a step keep their value and moments.

    Args:
        store (ParamStore): Parameters to update in place.
        lr (float): Step size.
        betas (tuple[float, float]): Decay rates of the two moment estimates.
        eps (float): Denominator floor.
    """

    def __init__(
        self,
        store: ParamStore,
        lr: float = 3e-4,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        if lr <= 0:
            raise ConfigurationError(f"lr must be positive, got {lr}")
        if not all(0.0 <= b < 1.0 for b in betas):
            raise ConfigurationError(f"betas must lie in [0, 1), got {betas}")
        self.store = store
        self.lr = lr
        self.betas = tuple(betas)
        self.eps = eps
        self.step_count = 0
        self.m = {name: np.zeros_like(p.data) for name, p in store.items()}
        self.v = {name: np.zeros_like(p.data) for name, p in store.items()}

    def zero_grad(self) -> None:
        self.store.zero_grad()

    def step(self) -> None:
        self.step_count += 1
        beta1, beta2 = self.betas
        correction1 = 1.0 - beta1**self.step_count
        correction2 = 1.0 - beta2**self.step_count
        for name, param in self.store.items():
            grad = param.grad
            if grad is None:
                continue
            m, v = self.m[name], self.v[name]
            m *= beta1
            m += (1.0 - beta1) * grad
            v *= beta2
            v += (1.0 - beta2) * (grad * grad)
            param.data -= self.lr * (m / correction1) / (np.sqrt(v / correction2) + self.eps)

    def reset(self) -> None:
        """Clears moments and the step counter (used when post-training starts)."""
        self.step_count = 0
        for name in self.m:
            self.m[name][...] = 0.0
            self.v[name][...] = 0.0

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {"step": np.asarray(self.step_count, dtype=np.int64)}
        for name in self.m:
            state[f"m.{name}"] = self.m[name].copy()
            state[f"v.{name}"] = self.v[name].copy()
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        self.step_count = int(state.get("step", 0))
        for name in self.m:
            if f"m.{name}" in state:
                self.m[name][...] = state[f"m.{name}"]
                self.v[name][...] = state[f"v.{name}"]
