"""
The assembled variational autoencoder.

:class:`VaeModel` owns the encoder, the decoder and, for the RBM prior, the RBM
parameters and the persistent fantasy chains. Inputs whose window is shorter
than the network window are edge-padded before encoding and the
reconstruction is cropped back to the input length.
"""

import logging
from typing import NamedTuple, Optional, Union

import numpy as np

from lpad.core.base import Mode, Module
from lpad.diffcore.checkpoint import Checkpoint
from lpad.diffcore.params import ParamStore
from lpad.diffcore.tensor import Tensor, get_default_dtype
from lpad.nets.config import crop_window, pad_window
from lpad.nets.decoder import Decoder, build_decoder
from lpad.nets.encoder import Encoder, build_encoder
from lpad.nets.heads import BernoulliPosterior, GaussianPosterior, PosteriorHead
from lpad.priors.bernoulli import ConcreteSample, sample_bernoulli_hard, sample_concrete
from lpad.priors.gaussian import GaussianSample, reparameterize_from_logvar
from lpad.rbm.prior import RbmChains, RbmPrior, layer_sizes
from lpad.vae.spec import ModelSpec, PriorKind

logger = logging.getLogger(__name__)

LatentSample = Union[GaussianSample, ConcreteSample]


class ForwardResult(NamedTuple):
    """Posterior, latent sample and reconstruction (cropped to the input length)."""

    posterior: PosteriorHead
    sample: LatentSample
    x_hat: Tensor
    logits: Tensor


class VaeModel(Module):
    """Encoder, decoder and prior built from a :class:`ModelSpec`.

    Args:
        spec (ModelSpec): Model description.
        seed (int): Seed of the initial weights.
    """

    def __init__(self, spec: ModelSpec, seed: int = 0):
        super().__init__()
        self.spec = spec
        rng = np.random.default_rng([seed, 101])
        self.encoder: Encoder = build_encoder(spec.net, rng)
        self.decoder: Decoder = build_decoder(spec.net, rng)
        self.prior: Optional[RbmPrior] = None
        self.chains: Optional[RbmChains] = None
        if spec.prior_kind == PriorKind.RBM:
            visible, hidden = layer_sizes(spec.net.latent_dim, spec.rbm.topology)
            self.prior = RbmPrior(visible, hidden, spec.rbm.topology, rng)
            self.chains = RbmChains.zeros(spec.rbm.chains, visible, hidden)

    def train_mode(self) -> "VaeModel":
        return self.set_mode(Mode.TRAIN)

    def eval_mode(self) -> "VaeModel":
        return self.set_mode(Mode.EVAL)

    def param_store(self) -> ParamStore:
        return ParamStore(self.named_parameters())

    def sample_latent(self, posterior: PosteriorHead, rng: np.random.Generator) -> LatentSample:
        """Draws one latent per instance: Gaussian reparameterization, a relaxed
        concrete sample in train mode, or a hard Bernoulli sample in eval mode."""
        if isinstance(posterior, GaussianPosterior):
            eps = rng.standard_normal(posterior.mu.shape)
            return reparameterize_from_logvar(posterior.mu, posterior.logvar, eps)
        assert isinstance(posterior, BernoulliPosterior)
        rho = rng.random(posterior.log_alpha.shape)
        if self.training:
            return sample_concrete(posterior.log_alpha, rho, self.spec.lam)
        return sample_bernoulli_hard(posterior.log_alpha, rho)

    def forward(self, x, rng: np.random.Generator) -> ForwardResult:
        data = np.asarray(x.data if isinstance(x, Tensor) else x, dtype=get_default_dtype())
        length = data.shape[-1]
        padded = pad_window(data, self.spec.net.window_len)
        posterior = self.encoder(Tensor(padded))
        sample = self.sample_latent(posterior, rng)
        logits = crop_window(self.decoder.logits(sample.z), length)
        return ForwardResult(
            posterior=posterior,
            sample=sample,
            x_hat=self.decoder.activate(logits),
            logits=logits,
        )

    def to_checkpoint(self, optimizer_state: Optional[dict] = None, metadata: Optional[dict] = None) -> Checkpoint:
        return Checkpoint(
            params=self.param_store().state_dict(),
            buffers={name: value.copy() for name, value in self.named_buffers()},
            optim=dict(optimizer_state or {}),
            chains=self.chains.state_dict() if self.chains is not None else {},
            metadata={"model_spec": self.spec.model_dump(mode="json", by_alias=True), **(metadata or {})},
        )

    def load_checkpoint(self, checkpoint: Checkpoint) -> None:
        """Restores parameters, running statistics and chains in place."""
        self.param_store().load_state_dict(checkpoint.params)
        self.load_buffers(checkpoint.buffers)
        if self.chains is not None and checkpoint.chains:
            self.chains = RbmChains.from_state_dict(checkpoint.chains)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint) -> "VaeModel":
        spec = ModelSpec.model_validate(checkpoint.metadata["model_spec"])
        model = cls(spec)
        model.load_checkpoint(checkpoint)
        return model
