"""
Bernoulli posterior over binary latents: concrete relaxation, hard samples, KL terms.

During training the latents are relaxed with the concrete (Gumbel-softmax)
distribution at temperature ``lam``; in evaluation they are hard Bernoulli
draws. As ``lam -> 0`` the relaxed sample at noise ``rho`` converges to the
hard sample at the mirrored noise ``1 - rho``; both are 1 with probability
``sigmoid(log_alpha)``.
"""

import logging
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np
from scipy.special import expit

from lpad.core.exceptions import DomainError
from lpad.diffcore.ops.elementwise import clamp, log, log_sigmoid, sigmoid, softplus
from lpad.diffcore.tensor import ArrayLike, Tensor, as_tensor

logger = logging.getLogger(__name__)

NOISE_BOUND = 1e-7
PROB_BOUND = 1e-7


class KLMode(str, Enum):
    """Estimator used by :func:`kl_bernoulli`.

    * MC: Single-sample estimate at the sampled latent.

    * ANALYTIC: Exact per-dimension sum.
    """

    MC = "mc"
    ANALYTIC = "analytic"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {mode.value for mode in cls}


class ConcreteSample(NamedTuple):
    """A relaxed or hard binary latent sample.

    Attributes:
        z: Relaxed values in (0, 1), or hard values in {0, 1}.
        rho: Clamped uniform noise.
        lam: Temperature; ``None`` for hard samples.
        logits: Pre-sigmoid values ``u`` with ``z = sigmoid(u)``; ``None`` for
            hard samples.
    """

    z: Tensor
    rho: np.ndarray
    lam: Optional[float] = None
    logits: Optional[Tensor] = None

    @property
    def hard(self) -> bool:
        return self.logits is None


def clamp_noise(rho: ArrayLike) -> np.ndarray:
    """Clips uniform noise to ``[1e-7, 1 - 1e-7]``."""
    data = rho.data if isinstance(rho, Tensor) else np.asarray(rho, dtype=float)
    return np.clip(data, NOISE_BOUND, 1.0 - NOISE_BOUND)


def sample_concrete(log_alpha: ArrayLike, rho: ArrayLike, lam: float) -> ConcreteSample:
    """Relaxed sample ``z = sigmoid((log_alpha + log rho - log(1 - rho)) / lam)``.

    Differentiable in ``log_alpha``. Values are kept strictly inside (0, 1).
    As ``lam`` goes to 0 the sample hardens to
    ``sample_bernoulli_hard(log_alpha, 1 - rho)``: the noise is mirrored, so
    the same ``rho`` passed to both functions does not give the same state.

    Raises:
        DomainError: If ``lam <= 0``.
    """
    if lam <= 0:
        raise DomainError(f"concrete temperature must be positive, got {lam}")
    log_alpha = as_tensor(log_alpha)
    noise = clamp_noise(rho).astype(log_alpha.data.dtype)
    logistic = np.log(noise) - np.log1p(-noise)
    logits = (log_alpha + logistic) * (1.0 / lam)
    info = np.finfo(log_alpha.data.dtype)
    z = clamp(sigmoid(logits), low=float(info.tiny), high=float(1.0 - info.epsneg))
    return ConcreteSample(z=z, rho=noise, lam=float(lam), logits=logits)


def sample_bernoulli_hard(log_alpha: ArrayLike, rho: ArrayLike) -> ConcreteSample:
    """Hard sample: ``z = 1`` iff ``rho < sigmoid(log_alpha)`` (strict). No gradient."""
    log_alpha = as_tensor(log_alpha)
    noise = clamp_noise(rho).astype(log_alpha.data.dtype)
    z = (noise < expit(log_alpha.data)).astype(log_alpha.data.dtype)
    return ConcreteSample(z=Tensor(z), rho=noise)


def _clamped_q(log_alpha: Tensor, diagnostics: Optional[dict]) -> Tensor:
    q = sigmoid(log_alpha)
    saturated = int(np.count_nonzero((q.data < PROB_BOUND) | (q.data > 1.0 - PROB_BOUND)))
    if saturated:
        logger.warning("Clamped %d saturated posterior probabilities in KL term", saturated)
        if diagnostics is not None:
            diagnostics["clamped"] = diagnostics.get("clamped", 0) + saturated
    return clamp(q, low=PROB_BOUND, high=1.0 - PROB_BOUND)


def kl_bernoulli(
    log_alpha_q: ArrayLike,
    z: Optional[ArrayLike] = None,
    mode: KLMode = KLMode.MC,
    diagnostics: Optional[dict] = None,
) -> Tensor:
    """KL between the factorized posterior ``q = sigmoid(log_alpha_q)`` and Bernoulli(0.5).

    * ``mc``: ``sum(z log(2q) + (1 - z) log(2(1 - q)))`` at the sampled ``z``
      (relaxed in training, hard in evaluation). Unbiased over hard ``z``.
    * ``analytic``: ``sum(q log(2q) + (1 - q) log(2(1 - q)))``; ``z`` is ignored.

    Sums over the last axis. ``q`` is clamped to ``[1e-7, 1 - 1e-7]``; the
    number of clamped entries is added to ``diagnostics["clamped"]`` when a
    dict is given.

    Raises:
        DomainError: If ``mode`` is ``mc`` and no ``z`` is given.
    """
    mode = KLMode(mode)
    log_alpha_q = as_tensor(log_alpha_q)
    q = _clamped_q(log_alpha_q, diagnostics)
    log_two = float(np.log(2.0))
    log_q = log(q) + log_two
    log_not_q = log(1.0 - q) + log_two
    if mode == KLMode.ANALYTIC:
        weight = q
    else:
        if z is None:
            raise DomainError("kl_bernoulli in mc mode needs the sampled z")
        weight = as_tensor(z)
    return (weight * log_q + (1.0 - weight) * log_not_q).sum(axis=-1)


def concrete_log_density(log_alpha: ArrayLike, logits: Tensor, lam: float) -> Tensor:
    """Log-density of the binary concrete distribution at ``z = sigmoid(logits)``.

    Evaluated in logit space:
    ``log lam + log_alpha + (lam + 1)(softplus(-u) + softplus(u))
    - 2 lam softplus(u) - 2 softplus(log_alpha - lam u)``, summed over the last
    axis. At ``log_alpha = 0``, ``z = 0.5`` each dimension contributes
    ``log lam``.
    """
    log_alpha = as_tensor(log_alpha)
    u = as_tensor(logits)
    per_dim = (
        (log_alpha + float(np.log(lam)))
        + (softplus(-u) + softplus(u)) * (lam + 1.0)
        - softplus(u) * (2.0 * lam)
        - softplus(log_alpha - u * lam) * 2.0
    )
    return per_dim.sum(axis=-1)


def bernoulli_log_mass(log_alpha: ArrayLike, z_hard: ArrayLike) -> Tensor:
    """``sum(z log sigmoid(a) + (1 - z) log sigmoid(-a))`` over the last axis."""
    log_alpha = as_tensor(log_alpha)
    z = as_tensor(z_hard)
    return (z * log_sigmoid(log_alpha) + (1.0 - z) * log_sigmoid(-log_alpha)).sum(axis=-1)
