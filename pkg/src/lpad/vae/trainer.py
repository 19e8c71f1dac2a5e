"""
Minibatch training, post-training and repeated reconstruction.

Random streams are derived from ``TrainConfig.seed`` so that a run never
depends on wall-clock state or on the storage order of the training set:

* ``[seed, 0, epoch]``: the per-epoch permutation of the canonical order.
* ``[seed, 1]``: posterior noise of the training steps.
* ``[seed, 2]``: Gibbs uniforms of the persistent chains.
* ``[seed, 3, epoch]``: posterior noise of the validation pass.
"""

import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from lpad.core.exceptions import DivergenceError, NonFiniteError, ShapeError
from lpad.datapipe.dataset import Dataset
from lpad.datapipe.io import write_table
from lpad.diffcore.checkpoint import save_checkpoint
from lpad.diffcore.params import Adam
from lpad.diffcore.tensor import no_grad
from lpad.rbm.loss import PhaseStats
from lpad.vae.loss import beta_elbo_loss
from lpad.vae.model import VaeModel
from lpad.vae.spec import TrainConfig

logger = logging.getLogger(__name__)

POST_TRAIN_EPOCHS = 300
POST_TRAIN_MINIBATCH = 32


class EpochRecord(BaseModel):
    """Mean losses of one epoch on one split. ``total = recon + kl_weighted``."""

    epoch: int
    split: str
    total: float
    recon: float
    kl_weighted: float


class TrainStats:
    """Per-epoch loss records plus the per-minibatch RBM phase trace."""

    COLUMNS = ("epoch", "split", "total", "recon", "kl_weighted")

    def __init__(self) -> None:
        self.records: list[EpochRecord] = []
        self.phase_trace: list[tuple[int, int, PhaseStats]] = []

    def __len__(self) -> int:
        return len(self.records)

    def record(self, epoch: int, split: str, recon: float, kl_weighted: float) -> EpochRecord:
        entry = EpochRecord(
            epoch=epoch, split=split, total=recon + kl_weighted, recon=recon, kl_weighted=kl_weighted
        )
        self.records.append(entry)
        return entry

    def split_records(self, split: str) -> list[EpochRecord]:
        return [r for r in self.records if r.split == split]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([r.model_dump() for r in self.records], columns=list(self.COLUMNS))

    def phase_frame(self) -> pd.DataFrame:
        rows = [{"epoch": e, "step": s, **p.model_dump()} for e, s, p in self.phase_trace]
        return pd.DataFrame(rows)

    def to_csv(self, path: Union[str, Path], header_lines: Sequence[str] = ()) -> Path:
        return write_table(self.to_frame(), path, header_lines)

    def phase_trace_csv(self, path: Union[str, Path], header_lines: Sequence[str] = ()) -> Path:
        return write_table(self.phase_frame(), path, header_lines)


def minibatch_indices(ds: Dataset, minibatch: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Disjoint full minibatches of a seeded permutation of the canonical order.

    The last ``len(ds) % minibatch`` instances of the permutation are dropped.
    """
    order = ds.canonical_order()[rng.permutation(len(ds))]
    count = len(ds) // minibatch
    return [order[i * minibatch : (i + 1) * minibatch] for i in range(count)]


def _checkpoint(
    model: VaeModel, optimizer: Adam, path: Path, epoch: int, cfg: TrainConfig
) -> Path:
    ckpt = model.to_checkpoint(
        optimizer_state=optimizer.state_dict(),
        metadata={"epoch": epoch, "train_config": cfg.model_dump(mode="json")},
    )
    return save_checkpoint(path, ckpt)


def validation_loss(
    model: VaeModel, ds: Dataset, minibatch: int, rng: np.random.Generator
) -> tuple[float, float]:
    """Mean ``(recon, beta * kl)`` over ``ds`` in eval mode.

    Batch-norm running statistics, parameters and RBM chains are left as they
    are; partial minibatches are included and weighted by size.
    """
    previous = model.mode
    model.eval_mode()
    recon_sum = kl_sum = 0.0
    try:
        with no_grad():
            order = ds.canonical_order()
            for start in range(0, len(ds), minibatch):
                idx = order[start : start + minibatch]
                terms = beta_elbo_loss(ds.instances[idx], model, rng, advance_chains=False)
                recon_sum += float(terms.recon.data) * len(idx)
                kl_sum += float(terms.kl.data) * model.spec.beta * len(idx)
    finally:
        model.set_mode(previous)
    return recon_sum / len(ds), kl_sum / len(ds)


def train(
    model: VaeModel,
    train_ds: Dataset,
    val_ds: Optional[Dataset],
    cfg: TrainConfig,
    checkpoint_path: Optional[Union[str, Path]] = None,
    optimizer: Optional[Adam] = None,
) -> tuple[VaeModel, TrainStats]:
    """Trains ``model`` in place with Adam and returns it with its loss history.

    Args:
        model (VaeModel): The model; RBM chains continue from their current state.
        train_ds (Dataset): Training instances.
        val_ds (Optional[Dataset]): Validation instances, or ``None``.
        cfg (TrainConfig): Optimization settings.
        checkpoint_path (Optional[Union[str, Path]]): Where to write the
            checkpoint at the end of training and every ``cfg.checkpoint_every``
            epochs. The initial state is written there too, so a divergence
            always has a checkpoint to point to.
        optimizer (Optional[Adam]): Optimizer to continue with; a fresh one is
            created by default.

    Raises:
        ShapeError: If the training set has fewer instances than a minibatch.
        DivergenceError: If a training loss is not finite. The error carries
            the path of the last checkpoint written.
    """
    if len(train_ds) < cfg.minibatch:
        raise ShapeError(
            "train", f"training set smaller than one minibatch of {cfg.minibatch}", (len(train_ds),)
        )
    optimizer = optimizer or Adam(model.param_store(), lr=cfg.lr, betas=cfg.adam_betas)
    noise_rng = np.random.default_rng([cfg.seed, 1])
    chain_rng = np.random.default_rng([cfg.seed, 2])
    stats = TrainStats()
    checkpoint_path = Path(checkpoint_path) if checkpoint_path is not None else None
    last_good = None
    if checkpoint_path is not None:
        last_good = _checkpoint(model, optimizer, checkpoint_path, 0, cfg)

    logger.info(
        "Training %s prior for %d epochs on %s (minibatch %d, lr %g)",
        model.spec.prior_kind.value,
        cfg.epochs,
        train_ds,
        cfg.minibatch,
        cfg.lr,
    )
    for epoch in range(1, cfg.epochs + 1):
        model.train_mode()
        batches = minibatch_indices(train_ds, cfg.minibatch, np.random.default_rng([cfg.seed, 0, epoch]))
        recon_sum = kl_sum = 0.0
        for step, idx in enumerate(batches):
            phases: list[PhaseStats] = []
            optimizer.zero_grad()
            try:
                terms = beta_elbo_loss(
                    train_ds.instances[idx], model, noise_rng, phase_stats=phases, chain_rng=chain_rng
                )
            except NonFiniteError as exc:
                logger.error("Training diverged at epoch %d, step %d: %s", epoch, step, exc)
                raise DivergenceError(
                    f"loss became non-finite at epoch {epoch}, step {step}: {exc}",
                    checkpoint_path=last_good,
                    term=exc.term,
                ) from exc
            terms.total.backward()
            optimizer.step()
            recon_sum += float(terms.recon.data)
            kl_sum += float(terms.kl.data) * model.spec.beta
            stats.phase_trace.extend((epoch, step, p) for p in phases)

        train_record = stats.record(epoch, "train", recon_sum / len(batches), kl_sum / len(batches))
        message = f"epoch {epoch}/{cfg.epochs} train total={train_record.total:.6g}"
        if val_ds is not None and len(val_ds):
            val_rng = np.random.default_rng([cfg.seed, 3, epoch])
            val_record = stats.record(epoch, "validation", *validation_loss(model, val_ds, cfg.minibatch, val_rng))
            message += f" validation total={val_record.total:.6g}"
        logger.info(message)

        if checkpoint_path is not None and cfg.checkpoint_every and epoch % cfg.checkpoint_every == 0:
            last_good = _checkpoint(model, optimizer, checkpoint_path, epoch, cfg)

    model.eval_mode()
    if checkpoint_path is not None:
        _checkpoint(model, optimizer, checkpoint_path, cfg.epochs, cfg)
    return model, stats


def post_train_config(
    cfg: TrainConfig, epochs: int = POST_TRAIN_EPOCHS, minibatch: int = POST_TRAIN_MINIBATCH
) -> TrainConfig:
    """``cfg`` with the post-training epoch count and minibatch size."""
    return cfg.model_copy(update={"epochs": epochs, "minibatch": minibatch})


def post_train(
    model: VaeModel,
    train_ds: Dataset,
    val_ds: Optional[Dataset],
    cfg: TrainConfig,
    checkpoint_path: Optional[Union[str, Path]] = None,
) -> tuple[VaeModel, TrainStats]:
    """Continues training a loaded model on new data.

    The optimizer starts from zero moments; RBM chains resume from the state
    the model carries. ``cfg`` is used as given, see :func:`post_train_config`.
    """
    logger.info("Post-training on %s", train_ds)
    return train(model, train_ds, val_ds, cfg, checkpoint_path=checkpoint_path)


def reconstruct(
    model: VaeModel, x: np.ndarray, samples: int, rng: np.random.Generator
) -> list[np.ndarray]:
    """``samples`` reconstructions of the batch ``x``, each with fresh posterior noise.

    Runs in eval mode (hard Bernoulli latents for the discrete priors) and
    restores the previous mode afterwards.

    Raises:
        ShapeError: If ``x`` is not ``(batch, channels, time)`` or ``samples < 1``.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError("reconstruct", "expected (batch, channels, time)", x.shape)
    if samples < 1:
        raise ShapeError("reconstruct", f"samples must be at least 1, got {samples}", (samples,))
    previous = model.mode
    model.eval_mode()
    try:
        with no_grad():
            return [model(x, rng).x_hat.numpy() for _ in range(samples)]
    finally:
        model.set_mode(previous)
