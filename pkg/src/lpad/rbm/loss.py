"""
Positive phase and the KL contribution of the RBM prior.

Per instance the contribution is ``log q(z|x) + E(z_pos) - mean_c E(chain_c)``.
The chain states are constants, so the negative-phase term only carries a
gradient to the RBM parameters. The log partition function is left out, which
makes the reported value unnormalized and possibly negative.
"""

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel

from lpad.core.base import Mode
from lpad.core.exceptions import UsageError
from lpad.diffcore.ops.shape import slice_axis
from lpad.diffcore.tensor import ArrayLike, Tensor, as_tensor
from lpad.priors.bernoulli import ConcreteSample, bernoulli_log_mass, concrete_log_density
from lpad.rbm.prior import PositivePhaseKind, RbmChains, RbmPrior, Topology, layer_sizes
from lpad.rbm.sampling import Direction, UniformSource, bernoulli_draw, cond_probs, energy

logger = logging.getLogger(__name__)


class PhaseStats(BaseModel):
    """Mean latent values and energies of both phases for one minibatch."""

    positive_visible_mean: float
    positive_hidden_mean: float
    negative_visible_mean: float
    negative_hidden_mean: float
    positive_energy: float
    negative_energy: float
    log_q: float


def positive_phase(
    z_post: ArrayLike,
    params: RbmPrior,
    topology: Topology,
    rng: UniformSource,
    kind: PositivePhaseKind = PositivePhaseKind.CONTINUOUS_VISIBLE_DISCRETE_HIDDEN,
) -> tuple[Tensor, Tensor]:
    """Maps posterior latents to the visible and hidden states of the positive phase.

    * bipartite: the two halves of ``z_post``, both continuous.
    * augmented: ``zv = z_post`` and ``zh`` from one Gibbs half-step, with
      the variable types selected by ``kind``. No gradient flows through ``zh``.

    Raises:
        ConfigurationError: For an odd latent size with the bipartite topology.
    """
    z_post = as_tensor(z_post)
    latent = z_post.shape[-1]
    layer_sizes(latent, topology)
    if Topology(topology) == Topology.BIPARTITE_LATENT_SPACE:
        half = latent // 2
        return (
            slice_axis(z_post, start=0, stop=half, axis=-1),
            slice_axis(z_post, start=half, stop=latent, axis=-1),
        )

    kind = PositivePhaseKind(kind)
    zv = z_post
    if kind == PositivePhaseKind.DISCRETE_VISIBLE_DISCRETE_HIDDEN:
        zv = Tensor(bernoulli_draw(z_post.data, rng))
    probs = cond_probs(zv.data, params, Direction.HIDDEN_GIVEN_VISIBLE)
    if kind == PositivePhaseKind.CONTINUOUS_VISIBLE_CONTINUOUS_HIDDEN:
        return zv, Tensor(probs)
    return zv, Tensor(bernoulli_draw(probs, rng))


def rbm_kl_loss(
    log_alpha_q: ArrayLike,
    sample: ConcreteSample,
    z_pos: tuple[Tensor, Tensor],
    chains: RbmChains,
    params: RbmPrior,
    mode: Mode = Mode.TRAIN,
    l2_weight: float = 0.0,
    stats: Optional[list] = None,
) -> Tensor:
    """Per-instance KL contribution of the RBM prior.

    Args:
        log_alpha_q: Posterior log-odds ``(batch, latent)``.
        sample (ConcreteSample): The latent sample drawn from the posterior.
            In train mode with a relaxed sample, ``log q`` is the concrete
            log-density; otherwise it is the Bernoulli log-mass at the hard
            sample.
        z_pos: Visible and hidden positive-phase states.
        chains (RbmChains): Fantasy states, already advanced for this batch.
        params (RbmPrior): The RBM.
        mode (Mode): Selects the ``log q`` evaluation.
        l2_weight (float): Weight of ``sum(W ** 2)``, added to every instance.
        stats (Optional[list]): When given, a :class:`PhaseStats` is appended.

    Returns:
        Tensor: One value per instance.

    Raises:
        UsageError: If there are no fantasy chains.
    """
    if chains.count == 0:
        raise UsageError("rbm_kl_loss needs at least one fantasy chain")
    log_alpha_q = as_tensor(log_alpha_q)
    if Mode(mode) == Mode.TRAIN and not sample.hard:
        log_q = concrete_log_density(log_alpha_q, sample.logits, sample.lam)
    else:
        log_q = bernoulli_log_mass(log_alpha_q, sample.z)

    zv, zh = z_pos
    positive = energy(zv, zh, params)
    negative = energy(chains.v_states, chains.h_states, params).mean()
    loss = log_q + positive - negative
    if l2_weight:
        loss = loss + (params.W * params.W).sum() * l2_weight

    if stats is not None:
        phase = PhaseStats(
            positive_visible_mean=float(np.mean(zv.data)),
            positive_hidden_mean=float(np.mean(zh.data)),
            negative_visible_mean=float(np.mean(chains.v_states)),
            negative_hidden_mean=float(np.mean(chains.h_states)),
            positive_energy=float(np.mean(positive.data)),
            negative_energy=float(negative.data),
            log_q=float(np.mean(log_q.data)),
        )
        stats.append(phase)
        logger.debug("RBM phases: %s", phase.model_dump())
    return loss
