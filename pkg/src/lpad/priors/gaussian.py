"""Gaussian posterior: reparameterized sampling and the closed-form KL to N(0, I)."""

from typing import NamedTuple

import numpy as np

from lpad.core.exceptions import DomainError, NonFiniteError
from lpad.diffcore.ops.elementwise import exp
from lpad.diffcore.tensor import ArrayLike, Tensor, as_tensor


class GaussianSample(NamedTuple):
    """A latent sample ``z = mu + sigma * eps`` and the noise that produced it."""

    z: Tensor
    eps: np.ndarray


def reparameterize_gaussian(mu: ArrayLike, sigma: ArrayLike, eps: ArrayLike) -> GaussianSample:
    """Draws ``z = mu + sigma * eps`` so that gradients reach ``mu`` and ``sigma``.

    Args:
        mu: Posterior means.
        sigma: Posterior standard deviations, strictly positive.
        eps: Standard-normal noise; treated as a constant.

    Raises:
        DomainError: If any ``sigma`` is not strictly positive.
    """
    sigma = as_tensor(sigma)
    if np.any(sigma.data <= 0):
        index = int(np.flatnonzero(sigma.data.reshape(-1) <= 0)[0])
        raise DomainError(f"sigma must be positive; coordinate {index} is {sigma.data.reshape(-1)[index]}")
    noise = np.asarray(eps.data if isinstance(eps, Tensor) else eps, dtype=sigma.data.dtype)
    return GaussianSample(z=as_tensor(mu) + sigma * noise, eps=noise)


def reparameterize_from_logvar(mu: Tensor, logvar: Tensor, eps: ArrayLike) -> GaussianSample:
    """Like :func:`reparameterize_gaussian` with ``sigma = exp(logvar / 2)``.

    A log-variance that underflows ``sigma`` to zero yields ``z = mu``.
    """
    noise = np.asarray(eps.data if isinstance(eps, Tensor) else eps, dtype=logvar.data.dtype)
    sigma = exp(logvar * 0.5)
    return GaussianSample(z=mu + sigma * noise, eps=noise)


def kl_gaussian_closed_form(mu: ArrayLike, logvar: ArrayLike) -> Tensor:
    """KL(N(mu, exp(logvar)) || N(0, I)), summed over the last axis.

    ``-1/2 * sum(1 + logvar - mu**2 - exp(logvar))``. A 1-D input gives a
    scalar; a ``(batch, latent)`` input gives one value per instance.

    Raises:
        NonFiniteError: If ``exp(logvar)`` overflows; ``index`` names the
            coordinate.
    """
    mu, logvar = as_tensor(mu), as_tensor(logvar)
    try:
        variance = exp(logvar)
    except NonFiniteError as exc:
        raise NonFiniteError(
            f"kl_gaussian: exp(logvar) overflows at coordinate {exc.index}",
            index=exc.index,
            term="kl_gaussian",
        ) from exc
    inner = (logvar + 1.0) - mu * mu - variance
    return inner.sum(axis=-1) * -0.5
