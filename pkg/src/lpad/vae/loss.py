"""
The beta-weighted evidence lower bound, as a loss to minimize.

``total = recon + beta * kl`` where both terms are per-instance values
averaged over the minibatch:

* ``recon``: sum over elements of the squared error (``mse``) or of the binary
  cross-entropy computed from decoder logits (``bce``).
* ``kl``: closed form for the Gaussian prior, the Bernoulli KL for the
  factorized prior, and the positive-minus-negative phase term for the RBM.
"""

import logging
from typing import NamedTuple, Optional

import numpy as np

from lpad.core.exceptions import NonFiniteError
from lpad.diffcore.ops.elementwise import softplus
from lpad.diffcore.tensor import Tensor, get_default_dtype
from lpad.priors.bernoulli import kl_bernoulli
from lpad.priors.gaussian import kl_gaussian_closed_form
from lpad.rbm.loss import positive_phase, rbm_kl_loss
from lpad.rbm.sampling import pcd_update
from lpad.vae.model import ForwardResult, VaeModel
from lpad.vae.spec import PriorKind, ReconMetric

logger = logging.getLogger(__name__)


class LossTerms(NamedTuple):
    """Scalar loss tensors of one minibatch."""

    total: Tensor
    recon: Tensor
    kl: Tensor


def reconstruction_loss(x: np.ndarray, result: ForwardResult, metric: ReconMetric) -> Tensor:
    """Per-instance reconstruction loss, summed over channels and time."""
    if ReconMetric(metric) == ReconMetric.BCE:
        # -[x log sigmoid(l) + (1 - x) log(1 - sigmoid(l))] = softplus(l) - x l
        per_element = softplus(result.logits) - result.logits * x
    else:
        diff = result.x_hat - x
        per_element = diff * diff
    return per_element.sum(axis=(1, 2))


def kl_term(
    model: VaeModel,
    result: ForwardResult,
    rng: np.random.Generator,
    advance_chains: bool,
    phase_stats: Optional[list] = None,
) -> Tensor:
    """Per-instance KL term for the model's prior.

    For the RBM prior the persistent chains are advanced by ``rbm.sweeps``
    first when ``advance_chains`` is set.
    """
    spec = model.spec
    if spec.prior_kind == PriorKind.GAUSSIAN:
        return kl_gaussian_closed_form(result.posterior.mu, result.posterior.logvar)
    if spec.prior_kind == PriorKind.BERNOULLI:
        return kl_bernoulli(result.posterior.log_alpha, result.sample.z, mode=spec.kl_mode)

    rbm = spec.rbm
    if advance_chains:
        model.chains = pcd_update(
            model.chains, model.prior, rbm.sweeps, rng, replay_fraction=rbm.replay_fraction
        )
    z_pos = positive_phase(result.sample.z, model.prior, rbm.topology, rng, kind=rbm.positive_phase)
    return rbm_kl_loss(
        result.posterior.log_alpha,
        result.sample,
        z_pos,
        model.chains,
        model.prior,
        mode=model.mode,
        l2_weight=rbm.l2_weight,
        stats=phase_stats,
    )


def beta_elbo_loss(
    batch: np.ndarray,
    model: VaeModel,
    rng: np.random.Generator,
    advance_chains: Optional[bool] = None,
    phase_stats: Optional[list] = None,
    chain_rng: Optional[np.random.Generator] = None,
) -> LossTerms:
    """Computes ``(total, recon, kl)`` for one minibatch.

    Args:
        batch (np.ndarray): Instances ``(batch, channels, time)``.
        model (VaeModel): The model, in the mode the loss should use.
        rng (np.random.Generator): Posterior noise and Gibbs uniforms.
        advance_chains (Optional[bool]): Advance the RBM chains before the
            loss. Defaults to ``True`` in train mode and ``False`` otherwise.
        phase_stats (Optional[list]): Receives RBM phase statistics.
        chain_rng (Optional[np.random.Generator]): Uniforms of the chain
            sweeps and positive-phase draws; defaults to ``rng``.

    Raises:
        NonFiniteError: If a term is not finite; ``term`` names it.
    """
    if advance_chains is None:
        advance_chains = model.training
    x = np.asarray(batch, dtype=get_default_dtype())
    try:
        result = model(x, rng)
        recon = reconstruction_loss(x, result, model.spec.recon_metric).mean()
    except NonFiniteError as exc:
        raise NonFiniteError(f"reconstruction term is not finite: {exc}", exc.index, term="recon") from exc
    try:
        kl = kl_term(model, result, chain_rng or rng, advance_chains, phase_stats).mean()
    except NonFiniteError as exc:
        raise NonFiniteError(f"kl term is not finite: {exc}", exc.index, term="kl") from exc
    total = recon + kl * model.spec.beta
    if not np.isfinite(total.data):
        logger.error("Non-finite loss: recon=%s kl=%s", recon.data, kl.data)
        raise NonFiniteError("total loss is not finite", term="total")
    return LossTerms(total=total, recon=recon, kl=kl)
