"""
Named-input / named-output computations with a forward pass and a backward pass.

A :class:`Graph` bundles a Python function over tensors with the parameters it
reads. :func:`evaluate` runs it on named inputs in a given mode and keeps the
recorded outputs on the graph instance; :func:`backward` then propagates a
seed from one of those outputs and returns the gradient of every parameter and
every input by name.

Example:
    .. code-block:: python

        from lpad.diffcore.graph import Graph, evaluate, backward
        from lpad.diffcore.ops.elementwise import sigmoid

        graph = Graph(lambda inputs: {"y": sigmoid(inputs["x"])})
        outputs = evaluate(graph, {"x": 0.0})     # outputs["y"] == 0.5
        grads = backward(graph, 1.0)              # grads["x"] == 0.25
"""

from typing import Callable, Mapping, Optional, Union

import numpy as np

from lpad.core.base import Mode, Module
from lpad.core.exceptions import ShapeError, UsageError
from lpad.diffcore.tensor import ArrayLike, Parameter, Tensor, enable_grad

GraphOutput = Union[Tensor, Mapping[str, Tensor]]


class Graph:
    """A differentiable computation over named tensors.

    Args:
        fn (Callable): Maps a dict of input tensors to a tensor or a dict of
            tensors. A single tensor is exposed under the name ``"out"``.
        module (Optional[Module]): Module whose parameters ``fn`` reads. Its
            mode is set by :func:`evaluate`.
        params (Optional[Mapping[str, Parameter]]): Extra named parameters.
        input_shapes (Optional[Mapping[str, tuple]]): Declared input shapes;
            when given, inputs are checked against them.
    """

    def __init__(
        self,
        fn: Callable[[dict[str, Tensor]], GraphOutput],
        module: Optional[Module] = None,
        params: Optional[Mapping[str, Parameter]] = None,
        input_shapes: Optional[Mapping[str, tuple[int, ...]]] = None,
    ):
        self.fn = fn
        self.module = module
        self.params = dict(params or {})
        self.input_shapes = dict(input_shapes or {})
        self.mode: Optional[Mode] = None
        self._inputs: Optional[dict[str, Tensor]] = None
        self._outputs: Optional[dict[str, Tensor]] = None

    def named_parameters(self) -> dict[str, Parameter]:
        named = dict(self.module.named_parameters()) if self.module is not None else {}
        named.update(self.params)
        return named

    def _prepare_inputs(self, inputs: Mapping[str, ArrayLike], mode: Mode) -> dict[str, Tensor]:
        missing = sorted(set(self.input_shapes) - set(inputs))
        if missing:
            raise UsageError(f"Missing graph inputs: {', '.join(missing)}.")
        prepared = {}
        for name, value in inputs.items():
            data = value.data if isinstance(value, Tensor) else value
            tensor = Tensor(np.array(data, copy=True), requires_grad=mode == Mode.TRAIN, name=name)
            expected = self.input_shapes.get(name)
            if expected is not None and tuple(expected) != tensor.shape:
                raise ShapeError(
                    "evaluate",
                    f"input '{name}' must have shape {tuple(expected)}",
                    tensor.shape,
                )
            prepared[name] = tensor
        return prepared


def evaluate(
    graph: Graph, inputs: Mapping[str, ArrayLike], mode: Mode = Mode.TRAIN
) -> dict[str, Tensor]:
    """Runs the graph forward.

    In train mode the operations are recorded so that :func:`backward` can run
    afterwards; in eval mode nothing is recorded.

    Args:
        graph (Graph): The computation.
        inputs (Mapping[str, ArrayLike]): Named input values.
        mode (Mode): ``Mode.TRAIN`` or ``Mode.EVAL``.

    Returns:
        dict[str, Tensor]: Named outputs.

    Raises:
        UsageError: If a declared input is missing.
        ShapeError: If an input or an intermediate result has incompatible extents.
    """
    mode = Mode(mode)
    if graph.module is not None:
        graph.module.set_mode(mode)
    prepared = graph._prepare_inputs(inputs, mode)
    with enable_grad(mode == Mode.TRAIN):
        result = graph.fn(prepared)
    outputs = {"out": result} if isinstance(result, Tensor) else dict(result)
    graph.mode = mode
    graph._inputs = prepared
    graph._outputs = outputs
    return outputs


def backward(
    graph: Graph, seed: ArrayLike, output: Optional[str] = None
) -> dict[str, np.ndarray]:
    """Propagates ``seed`` from one output back to every parameter and input.

    Args:
        graph (Graph): A graph on which :func:`evaluate` ran in train mode.
        seed: Gradient of the objective with respect to the chosen output.
        output (Optional[str]): Output name. May be omitted if there is only one.

    Returns:
        dict[str, np.ndarray]: Gradients keyed by parameter or input name, each
        with the exact shape of its tensor. Entries that the output does not
        depend on are zero.

    Raises:
        UsageError: If evaluate was not run, or ran in eval mode, or the
            output name is ambiguous or unknown.
    """
    if graph._outputs is None:
        raise UsageError("backward called before evaluate on this graph.")
    if graph.mode != Mode.TRAIN:
        raise UsageError("backward requires evaluate to have run in train mode.")
    if output is None:
        if len(graph._outputs) != 1:
            raise UsageError(
                f"Graph has outputs {sorted(graph._outputs)}; name the one to seed."
            )
        output = next(iter(graph._outputs))
    if output not in graph._outputs:
        raise UsageError(
            f"Unknown output '{output}'. Valid outputs: {sorted(graph._outputs)}."
        )

    leaves = {**graph.named_parameters(), **graph._inputs}
    for tensor in leaves.values():
        tensor.zero_grad()
    target = graph._outputs[output]
    if target.requires_grad:
        target.backward(seed)
    return {
        name: (tensor.grad if tensor.grad is not None else np.zeros_like(tensor.data))
        for name, tensor in leaves.items()
    }
