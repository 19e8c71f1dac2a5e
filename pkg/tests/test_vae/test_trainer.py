import numpy as np
import pandas as pd
import pytest

from lpad.core.exceptions import DivergenceError, NonFiniteError, ShapeError
from lpad.datapipe.dataset import Dataset, NormMode
from lpad.datapipe.normalize import normalize
from lpad.diffcore.checkpoint import load_checkpoint
from lpad.vae import trainer
from lpad.vae.model import VaeModel
from lpad.vae.spec import PriorKind, TrainConfig
from lpad.vae.trainer import (
    POST_TRAIN_EPOCHS,
    POST_TRAIN_MINIBATCH,
    minibatch_indices,
    post_train,
    post_train_config,
    train,
    validation_loss,
)
from tests.conftest import BaseModelTest, tiny_spec


def _frame(stats) -> pd.DataFrame:
    return stats.to_frame()


@pytest.mark.parametrize("n,minibatch,expected", [(1280, 128, 10), (1300, 128, 10), (127, 128, 0)])
def test_minibatch_count(n, minibatch, expected):
    ds = Dataset(np.zeros((n, 1, 2)), np.zeros(n))
    batches = minibatch_indices(ds, minibatch, np.random.default_rng(0))
    assert len(batches) == expected
    assert all(len(b) == minibatch for b in batches)


def test_minibatches_are_disjoint():
    ds = Dataset(np.zeros((50, 1, 2)), np.zeros(50))
    batches = minibatch_indices(ds, 8, np.random.default_rng(0))
    joined = np.concatenate(batches)
    assert len(np.unique(joined)) == len(joined) == 48


def test_post_train_config():
    cfg = post_train_config(TrainConfig(seed=4))
    assert (cfg.epochs, cfg.minibatch, cfg.seed) == (POST_TRAIN_EPOCHS, POST_TRAIN_MINIBATCH, 4)
    assert (POST_TRAIN_EPOCHS, POST_TRAIN_MINIBATCH) == (300, 32)


class TestTrain(BaseModelTest):
    prior_kind = PriorKind.GAUSSIAN
    cfg = TrainConfig(epochs=3, minibatch=4, lr=1e-3, seed=2)

    def test_records_each_epoch_for_both_splits(self):
        _, stats = train(self.model, self.dataset(16), self.dataset(5), self.cfg)
        frame = _frame(stats)
        assert list(frame["split"]) == ["train", "validation"] * 3
        np.testing.assert_allclose(frame["total"], frame["recon"] + frame["kl_weighted"])
        assert not self.model.training

    def test_parameters_change(self):
        before = self.model.param_store().state_dict()
        train(self.model, self.dataset(16), None, self.cfg)
        after = self.model.param_store().state_dict()
        assert any(not np.array_equal(before[name], after[name]) for name in before)

    def test_same_seed_is_bit_identical(self):
        train_ds, val_ds = self.dataset(16), self.dataset(5)
        _, first = train(self.build_model(), train_ds, val_ds, self.cfg)
        _, second = train(self.build_model(), train_ds, val_ds, self.cfg)
        pd.testing.assert_frame_equal(_frame(first), _frame(second), check_exact=True)

    def test_storage_order_does_not_matter(self):
        train_ds = self.dataset(16)
        perm = np.random.default_rng(5).permutation(16)
        shuffled = Dataset(train_ds.instances[perm], train_ds.labels[perm], train_ds.instance_ids[perm])
        first_model, first = train(self.build_model(), train_ds, None, self.cfg)
        second_model, second = train(self.build_model(), shuffled, None, self.cfg)
        pd.testing.assert_frame_equal(_frame(first), _frame(second), check_exact=True)
        for name, value in first_model.param_store().state_dict().items():
            np.testing.assert_array_equal(value, second_model.param_store()[name].data)

    def test_training_set_smaller_than_minibatch(self):
        with pytest.raises(ShapeError):
            train(self.model, self.dataset(3), None, self.cfg)

    def test_checkpoints_are_written(self, tmp_path):
        path = tmp_path / "model.ckpt"
        cfg = self.cfg.model_copy(update={"checkpoint_every": 1})
        train(self.model, self.dataset(16), None, cfg, checkpoint_path=path)
        ckpt = load_checkpoint(path)
        assert ckpt.metadata["epoch"] == 3
        assert int(ckpt.optim["step"]) == 3 * 4
        restored = VaeModel.from_checkpoint(ckpt)
        np.testing.assert_array_equal(
            restored.encoder.head.mu.weight.data, self.model.encoder.head.mu.weight.data
        )

    def test_divergence_points_to_last_checkpoint(self, tmp_path, monkeypatch):
        def diverge(*args, **kwargs):
            raise NonFiniteError("kl term is not finite", term="kl")

        monkeypatch.setattr(trainer, "beta_elbo_loss", diverge)
        path = tmp_path / "model.ckpt"
        with pytest.raises(DivergenceError) as exc_info:
            train(self.model, self.dataset(16), None, self.cfg, checkpoint_path=path)
        assert exc_info.value.checkpoint_path == path
        assert exc_info.value.term == "kl"
        assert load_checkpoint(path).metadata["epoch"] == 0

    def test_validation_loss_leaves_state_untouched(self):
        buffers = {name: value.copy() for name, value in self.model.named_buffers()}
        recon, kl = validation_loss(self.model, self.dataset(7), 4, np.random.default_rng(0))
        assert recon > 0 and kl > 0
        assert self.model.training
        for name, value in self.model.named_buffers():
            np.testing.assert_array_equal(value, buffers[name])

    def test_stats_csv_has_snapshot_header(self, tmp_path):
        _, stats = train(self.model, self.dataset(16), None, self.cfg)
        path = stats.to_csv(tmp_path / "train_stats.csv", header_lines=["seed = 2"])
        assert path.read_text().startswith("# seed = 2\n")
        assert len(pd.read_csv(path, comment="#")) == 3


class TestRbmTraining(BaseModelTest):
    prior_kind = PriorKind.RBM
    cfg = TrainConfig(epochs=1, minibatch=4, lr=1e-3, seed=0)

    def test_chains_persist_through_training_and_post_training(self):
        sweeps = self.spec.rbm.sweeps
        train(self.model, self.dataset(8), None, self.cfg)
        assert self.model.chains.sweep_count == 2 * sweeps
        post_train(self.model, self.dataset(8), None, self.cfg)
        assert self.model.chains.sweep_count == 4 * sweeps

    def test_phase_trace_is_recorded(self, tmp_path):
        _, stats = train(self.model, self.dataset(8), None, self.cfg)
        frame = stats.phase_frame()
        assert list(frame["step"]) == [0, 1]
        assert {"positive_energy", "negative_energy", "log_q"} <= set(frame.columns)
        assert stats.phase_trace_csv(tmp_path / "phases.csv").exists()


def test_loss_decreases_on_synthetic_data(synth_small):
    data = normalize(synth_small, NormMode.ZSCORE)
    spec = tiny_spec(PriorKind.GAUSSIAN, net_overrides={"in_channels": 3})
    cfg = TrainConfig(epochs=50, minibatch=16, lr=3e-3, seed=0)
    _, stats = train(VaeModel(spec, seed=0), data, None, cfg)
    records = stats.split_records("train")
    assert records[-1].total < records[0].total
