"""Posterior heads mapping encoder features to variational parameters."""

from typing import NamedTuple, Union

import numpy as np

from lpad.core.base import Module
from lpad.diffcore.ops.elementwise import softplus
from lpad.diffcore.tensor import Tensor
from lpad.nets.layers import Linear


class GaussianPosterior(NamedTuple):
    """Mean and log-variance, each ``(batch, latent_dim)``."""

    mu: Tensor
    logvar: Tensor


class BernoulliPosterior(NamedTuple):
    """Log-odds ``log alpha^q`` of the posterior, ``(batch, latent_dim)``."""

    log_alpha: Tensor


PosteriorHead = Union[GaussianPosterior, BernoulliPosterior]


class GaussianHead(Module):
    def __init__(
        self,
        in_features: int,
        latent_dim: int,
        rng: np.random.Generator,
        logvar_softplus: bool = True,
    ):
        super().__init__()
        self.mu = Linear(in_features, latent_dim, rng)
        self.logvar = Linear(in_features, latent_dim, rng)
        self.logvar_softplus = logvar_softplus

    def forward(self, features: Tensor) -> GaussianPosterior:
        logvar = self.logvar(features)
        if self.logvar_softplus:
            logvar = softplus(logvar)
        return GaussianPosterior(mu=self.mu(features), logvar=logvar)


class BernoulliHead(Module):
    def __init__(self, in_features: int, latent_dim: int, rng: np.random.Generator):
        super().__init__()
        self.log_alpha = Linear(in_features, latent_dim, rng)

    def forward(self, features: Tensor) -> BernoulliPosterior:
        return BernoulliPosterior(log_alpha=self.log_alpha(features))
