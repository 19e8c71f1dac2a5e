from typing import Callable, Optional, Sequence
import logging

import numpy as np
import pytest

from lpad.datapipe.dataset import Dataset
from lpad.datapipe.synth import SynthConfig, synth_generate
from lpad.diffcore.gradcheck import finite_difference_grad
from lpad.diffcore.tensor import Tensor, set_default_dtype
from lpad.nets.config import DecoderOutput, HeadKind, NetConfig
from lpad.vae.model import VaeModel
from lpad.vae.spec import ModelSpec, PriorKind, RbmSpec, ReconMetric

# Configure logging
logging.getLogger("lpad").setLevel(logging.INFO)


@pytest.fixture(autouse=True)
def float64():
    """Every test runs at 64-bit, whatever a previous test selected."""
    set_default_dtype("float64")
    yield
    set_default_dtype("float64")


@pytest.fixture(scope="function")
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(scope="function")
def synth_small() -> Dataset:
    """64 instances, 3 channels (one binary), 8 steps, 8 anomalies."""
    return synth_generate(
        SynthConfig(
            n_instances=64,
            channels=3,
            binary_channels=1,
            window_len=8,
            anomaly_fraction=0.125,
            seed=5,
        )
    )


def tiny_net(
    head_kind: HeadKind = HeadKind.GAUSSIAN,
    decoder_output: DecoderOutput = DecoderOutput.LINEAR,
    **overrides,
) -> NetConfig:
    """in=2, len=8, one (2 filters, kernel 3) branch, one block, latent 4."""
    values = dict(
        in_channels=2,
        window_len=8,
        branches=[(2, 3)],
        blocks_per_branch=1,
        latent_dim=4,
        head_kind=head_kind,
        decoder_output=decoder_output,
    )
    values.update(overrides)
    return NetConfig(**values)


def tiny_spec(
    prior_kind: PriorKind,
    recon_metric: ReconMetric = ReconMetric.MSE,
    net_overrides: Optional[dict] = None,
    **overrides,
) -> ModelSpec:
    """A consistent ModelSpec around :func:`tiny_net` for any prior and metric."""
    prior_kind = PriorKind(prior_kind)
    head = HeadKind.GAUSSIAN if prior_kind == PriorKind.GAUSSIAN else HeadKind.BERNOULLI
    output = (
        DecoderOutput.SIGMOID
        if ReconMetric(recon_metric) == ReconMetric.BCE
        else DecoderOutput.LINEAR
    )
    values = dict(
        prior_kind=prior_kind,
        net=tiny_net(head, output, **(net_overrides or {})),
        rbm=RbmSpec(chains=6, sweeps=2) if prior_kind == PriorKind.RBM else None,
        recon_metric=recon_metric,
    )
    values.update(overrides)
    return ModelSpec(**values)


def max_grad_violation(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    rtol: float = 1e-4,
    atol: float = 1e-8,
    eps: float = 1e-6,
) -> float:
    """Largest ``|analytic - numeric| / (atol + rtol * max(|a|, |n|))`` over every input of ``fn``.

    ``fn`` maps tensors to a scalar tensor; a result of at most 1 passes.
    """
    tensors = [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
    fn(*tensors).backward()
    analytic = [t.grad if t.grad is not None else np.zeros_like(t.data) for t in tensors]
    worst = 0.0
    for tensor, grad in zip(tensors, analytic):
        numeric = finite_difference_grad(lambda _: fn(*tensors), tensor, eps=eps).data
        scale = np.maximum(np.abs(grad), np.abs(numeric))
        violation = np.abs(grad - numeric) / (atol + rtol * scale)
        worst = max(worst, float(violation.max(initial=0.0)))
    return worst


class BaseModelTest:
    prior_kind: PriorKind = PriorKind.GAUSSIAN
    recon_metric: ReconMetric = ReconMetric.MSE

    @pytest.fixture(autouse=True, scope="function")
    def setup(self, rng):
        """Setup a tiny model of the class's prior kind."""
        self.rng = rng
        self.spec = tiny_spec(self.prior_kind, self.recon_metric)
        self.model = VaeModel(self.spec, seed=0)

        yield

        self.model.eval_mode()

    def build_model(
        self,
        prior_kind: Optional[PriorKind] = None,
        recon_metric: Optional[ReconMetric] = None,
        seed: int = 0,
        **overrides,
    ) -> VaeModel:
        spec = tiny_spec(
            prior_kind or self.prior_kind, recon_metric or self.recon_metric, **overrides
        )
        return VaeModel(spec, seed=seed)

    def batch(self, n: int = 3, spec: Optional[ModelSpec] = None) -> np.ndarray:
        """Random instances shaped for ``spec``; in [0, 1] for bce models."""
        spec = spec or self.spec
        shape = (n, spec.net.in_channels, spec.net.window_len)
        if spec.recon_metric == ReconMetric.BCE:
            return self.rng.uniform(0.0, 1.0, size=shape)
        return self.rng.normal(0.0, 0.5, size=shape)

    def dataset(self, n: int, spec: Optional[ModelSpec] = None, anomalies: int = 0) -> Dataset:
        labels = np.zeros(n, dtype=np.int64)
        labels[:anomalies] = 1
        return Dataset(self.batch(n, spec), labels)
