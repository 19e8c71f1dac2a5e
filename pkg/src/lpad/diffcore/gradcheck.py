"""
Central finite differences, used as the oracle for every analytic gradient.

Only meaningful at 64-bit: with ``eps`` around ``1e-6`` the truncation and
rounding errors of a 32-bit evaluation exceed the tolerances used here.
"""

import logging
from typing import Callable, Mapping, Optional, Union

import numpy as np
from pydantic import BaseModel

from lpad.core.exceptions import DomainError, NonFiniteError
from lpad.diffcore.tensor import Parameter, Tensor, no_grad

logger = logging.getLogger(__name__)

ScalarFn = Callable[[Tensor], Union[Tensor, float]]


def _scalar(value: Union[Tensor, float, np.ndarray]) -> float:
    if isinstance(value, Tensor):
        return value.item()
    return float(np.asarray(value).reshape(-1)[0])


def finite_difference_grad(f: ScalarFn, x: Tensor, eps: float = 1e-5) -> Tensor:
    """Estimates the gradient of a scalar function by central differences.

    Each coordinate ``i`` gets ``(f(x + eps e_i) - f(x - eps e_i)) / (2 eps)``.
    ``x`` is perturbed in place and restored afterwards.

    Args:
        f: Function of one tensor returning a scalar tensor or float.
        x (Tensor): Point of evaluation.
        eps (float): Step size, strictly positive.

    Returns:
        Tensor: The estimate, with the shape of ``x``.

    Raises:
        DomainError: If ``eps <= 0``.
        NonFiniteError: If ``f`` is not finite at a perturbed point; ``index``
            carries the flat coordinate.
    """
    if eps <= 0:
        raise DomainError(f"eps must be positive, got {eps}")
    if not x.data.flags.c_contiguous or not x.data.flags.writeable:
        x.data = np.array(x.data, order="C", copy=True)
    flat = x.data.reshape(-1)
    grad = np.zeros_like(flat)
    with no_grad():
        for i in range(flat.size):
            original = flat[i]
            try:
                flat[i] = original + eps
                upper = _scalar(f(x))
                flat[i] = original - eps
                lower = _scalar(f(x))
            except NonFiniteError as exc:
                raise NonFiniteError(
                    f"non-finite function value at coordinate {i}: {exc}",
                    index=i,
                    term=exc.term,
                ) from exc
            finally:
                flat[i] = original
            if not (np.isfinite(upper) and np.isfinite(lower)):
                raise NonFiniteError(
                    f"non-finite function value at coordinate {i}", index=i
                )
            grad[i] = (upper - lower) / (2.0 * eps)
    return Tensor(grad.reshape(x.shape))


class GradientReport(BaseModel):
    """Outcome of :func:`check_gradients`.

    ``max_violation`` is the largest ``|a - n| / (atol + rtol * max(|a|, |n|))``
    over all coordinates; the check passes when it is at most 1.
    """

    max_relative_error: float
    max_violation: float
    worst_parameter: Optional[str] = None
    worst_index: Optional[int] = None
    per_parameter: dict[str, float] = {}
    passed: bool


def check_gradients(
    loss_fn: Callable[[], Tensor],
    params: Mapping[str, Parameter],
    eps: float = 1e-6,
    rtol: float = 1e-4,
    atol: float = 1e-8,
) -> GradientReport:
    """Compares backward-pass gradients with finite differences for each parameter.

    ``loss_fn`` takes no arguments and must read the parameters, so that the
    in-place perturbation done by :func:`finite_difference_grad` is visible to
    it. Any randomness inside ``loss_fn`` must be frozen by the caller.

    Args:
        loss_fn: Returns the scalar loss for the current parameter values.
        params: Named parameters to check.
        eps (float): Finite-difference step.
        rtol (float): Relative tolerance.
        atol (float): Absolute floor.

    Returns:
        GradientReport: Worst-case errors and the pass/fail verdict.
    """
    for param in params.values():
        param.zero_grad()
    loss_fn().backward()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }

    max_rel, max_violation = 0.0, 0.0
    worst_name, worst_index = None, None
    per_parameter: dict[str, float] = {}
    for name, param in params.items():
        numeric = finite_difference_grad(lambda _: loss_fn(), param, eps=eps).data
        a = analytic[name].reshape(-1)
        n = numeric.reshape(-1)
        diff = np.abs(a - n)
        scale = np.maximum(np.abs(a), np.abs(n))
        violation = diff / (atol + rtol * scale)
        relative = diff / np.maximum(scale, atol)
        per_parameter[name] = float(relative.max(initial=0.0))
        if violation.size and violation.max() > max_violation:
            max_violation = float(violation.max())
            worst_name, worst_index = name, int(violation.argmax())
        max_rel = max(max_rel, per_parameter[name])

    report = GradientReport(
        max_relative_error=max_rel,
        max_violation=max_violation,
        worst_parameter=worst_name,
        worst_index=worst_index,
        per_parameter=per_parameter,
        passed=max_violation <= 1.0,
    )
    if not report.passed:
        logger.warning(
            "Gradient check failed at %s[%s]: violation %.3g",
            worst_name,
            worst_index,
            max_violation,
        )
    return report
