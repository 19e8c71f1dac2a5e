"""
RBM energy, block-Gibbs conditionals and persistent contrastive divergence.

Sampling uses the rule ``state = 1 iff u < p`` with strict inequality. The
random source only needs a ``random(size)`` method returning uniforms in
``[0, 1)``, so a ``numpy.random.Generator`` or a test stub both work. All chains
are swept together as one vectorized block per layer.
"""

import logging
from enum import Enum
from typing import Protocol

import numpy as np
from scipy.special import expit

from lpad.core.exceptions import DomainError, ShapeError
from lpad.diffcore.ops.linear import linear
from lpad.diffcore.tensor import ArrayLike, Tensor, as_tensor
from lpad.rbm.prior import RbmChains, RbmPrior

logger = logging.getLogger(__name__)


class UniformSource(Protocol):
    def random(self, size) -> np.ndarray: ...


class Direction(str, Enum):
    """Which conditional :func:`cond_probs` evaluates."""

    HIDDEN_GIVEN_VISIBLE = "hidden_given_visible"
    VISIBLE_GIVEN_HIDDEN = "visible_given_hidden"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {direction.value for direction in cls}


def _check_layer(op: str, array_shape: tuple[int, ...], expected: int, layer: str) -> None:
    if not array_shape or array_shape[-1] != expected:
        raise ShapeError(op, f"{layer} states must have last extent {expected}", array_shape)


def energy(zv: ArrayLike, zh: ArrayLike, params: RbmPrior) -> Tensor:
    """``E = -zv^T W zh - a^T zv - b^T zh``, over the last axis.

    Differentiable with respect to ``zv``, ``zh`` and the parameters. Leading
    axes are treated as a batch.

    Raises:
        ShapeError: If the state sizes do not match ``W``.
    """
    zv, zh = as_tensor(zv), as_tensor(zh)
    _check_layer("energy", zv.shape, params.visible, "visible")
    _check_layer("energy", zh.shape, params.hidden, "hidden")
    visible_field = linear(zh, params.W, params.a)
    return -((zv * visible_field).sum(axis=-1) + (zh * params.b).sum(axis=-1))


def energy_np(v: np.ndarray, h: np.ndarray, params: RbmPrior) -> np.ndarray:
    """Constant-valued energies of binary states, one per row."""
    W, a, b = params.W.data, params.a.data, params.b.data
    return -(np.einsum("ck,kl,cl->c", v, W, h) + v @ a + h @ b)


def cond_probs(given: ArrayLike, params: RbmPrior, direction: Direction) -> np.ndarray:
    """Conditional unit probabilities of one layer given the other.

    * ``hidden_given_visible``: ``sigmoid(b + W^T zv)``
    * ``visible_given_hidden``: ``sigmoid(a + W zh)``

    Raises:
        ShapeError: If ``given`` does not match the conditioning layer.
    """
    direction = Direction(direction)
    data = given.data if isinstance(given, Tensor) else np.asarray(given, dtype=float)
    W, a, b = params.W.data, params.a.data, params.b.data
    if direction == Direction.HIDDEN_GIVEN_VISIBLE:
        _check_layer("cond_probs", data.shape, params.visible, "visible")
        return expit(data @ W + b)
    _check_layer("cond_probs", data.shape, params.hidden, "hidden")
    return expit(data @ W.T + a)


def bernoulli_draw(probs: np.ndarray, rng: UniformSource) -> np.ndarray:
    """Binary states with ``1`` where a fresh uniform is strictly below ``probs``."""
    return (rng.random(probs.shape) < probs).astype(probs.dtype)


def gibbs_step(chains: RbmChains, params: RbmPrior, rng: UniformSource) -> RbmChains:
    """One block-Gibbs sweep: hidden given visible, then visible given hidden."""
    h = bernoulli_draw(cond_probs(chains.v_states, params, Direction.HIDDEN_GIVEN_VISIBLE), rng)
    v = bernoulli_draw(cond_probs(h, params, Direction.VISIBLE_GIVEN_HIDDEN), rng)
    return RbmChains(v, h, chains.sweep_count + 1)


def pcd_update(
    chains: RbmChains,
    params: RbmPrior,
    k: int,
    rng: UniformSource,
    replay_fraction: float = 0.0,
) -> RbmChains:
    """Advances the persistent chains by ``k`` sweeps from their current states.

    Chains are never re-initialized. With ``replay_fraction > 0`` that share
    of the chains (rounded) has its visible states re-randomized uniformly
    before sweeping.

    Raises:
        DomainError: If ``k`` is negative.
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    if replay_fraction > 0.0 and chains.count:
        chains = _replay(chains, replay_fraction, rng)
    for _ in range(k):
        chains = gibbs_step(chains, params, rng)
    return chains


def _replay(chains: RbmChains, fraction: float, rng: UniformSource) -> RbmChains:
    count = int(round(fraction * chains.count))
    if not count:
        return chains
    rows = np.argsort(rng.random(chains.count), kind="stable")[:count]
    v = chains.v_states.copy()
    v[rows] = (rng.random((count, v.shape[1])) < 0.5).astype(v.dtype)
    logger.debug("Re-randomized %d of %d fantasy chains", count, chains.count)
    return RbmChains(v, chains.h_states.copy(), chains.sweep_count)
