import numpy as np
import pytest

from lpad.core.exceptions import ConfigurationError, ShapeError
from lpad.datapipe.dataset import ChannelKind, Dataset, concat_datasets
from lpad.datapipe.split import SplitSpec, split
from lpad.datapipe.synth import AnomalyKind, SynthConfig, synth_generate


def labelled(n: int, anomalies: int) -> Dataset:
    labels = np.zeros(n)
    labels[:anomalies] = 1
    return Dataset(np.arange(n, dtype=float).reshape(n, 1, 1), labels)


class TestSplit:
    @pytest.mark.parametrize(
        "fractions,sizes", [((0.6, 0.2, 0.2), [60, 20, 20]), ((0.5, 0.5), [50, 50])]
    )
    def test_sizes_and_partition(self, fractions, sizes):
        ds = labelled(100, 10)
        parts = split(ds, SplitSpec(fractions=fractions, seed=3))
        assert [len(p) for p in parts] == sizes
        ids = np.concatenate([p.instance_ids for p in parts])
        assert sorted(ids) == list(range(100))

    def test_same_seed_same_membership(self):
        ds = labelled(100, 10)
        first = split(ds, SplitSpec(seed=8))
        second = split(ds, SplitSpec(seed=8))
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.instance_ids, b.instance_ids)

    def test_other_seed_other_membership(self):
        ds = labelled(100, 10)
        assert not np.array_equal(
            split(ds, SplitSpec(seed=1))[0].instance_ids, split(ds, SplitSpec(seed=2))[0].instance_ids
        )

    def test_anomalies_are_stratified(self):
        parts = split(labelled(100, 10), SplitSpec(seed=0))
        assert [int(p.labels.sum()) for p in parts] == [6, 2, 2]

    def test_storage_order_does_not_matter(self):
        ds = labelled(50, 5)
        perm = np.random.default_rng(1).permutation(50)
        shuffled = Dataset(ds.instances[perm], ds.labels[perm], ds.instance_ids[perm])
        for a, b in zip(split(ds, SplitSpec(seed=4)), split(shuffled, SplitSpec(seed=4))):
            np.testing.assert_array_equal(a.instance_ids, b.instance_ids)

    def test_empty_split(self):
        with pytest.raises(ConfigurationError):
            split(labelled(3, 0), SplitSpec(fractions=(0.9, 0.05, 0.05)))

    @pytest.mark.parametrize("fractions", [(0.5, 0.6), (1.0, 0.0), ()])
    def test_invalid_fractions(self, fractions):
        with pytest.raises(ConfigurationError):
            SplitSpec(fractions=fractions)


class TestDataset:
    def test_defaults(self):
        ds = Dataset(np.zeros((2, 3, 4)), [0, 1])
        assert ds.channel_names == ["ch0", "ch1", "ch2"]
        assert ds.anomaly_fraction == 0.5
        assert (ds.channels, ds.window_len) == (3, 4)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 3)), [0, 1])
        with pytest.raises(ShapeError):
            Dataset(np.zeros((2, 3, 4)), [0, 1, 0])

    def test_labels_must_be_binary(self):
        with pytest.raises(ConfigurationError):
            Dataset(np.zeros((2, 1, 1)), [0, 2])

    def test_concat(self):
        joined = concat_datasets(labelled(3, 1), labelled(2, 0))
        assert len(joined) == 5
        assert int(joined.labels.sum()) == 1


class TestSynth:
    def test_exact_anomaly_count(self):
        ds = synth_generate(SynthConfig(n_instances=2000, anomaly_fraction=0.05))
        assert int(ds.labels.sum()) == 100
        assert ds.instances.shape == (2000, 7, 60)

    def test_same_seed_bit_identical(self):
        cfg = SynthConfig(n_instances=50, seed=9)
        a, b = synth_generate(cfg), synth_generate(cfg)
        np.testing.assert_array_equal(a.instances, b.instances)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_channel_layout(self):
        ds = synth_generate(SynthConfig(n_instances=20, channels=4, binary_channels=2))
        assert ds.channel_names == ["airspeed", "sensor1", "event0", "event1"]
        assert ds.channel_kinds[-1] == ChannelKind.BINARY
        assert set(np.unique(ds.instances[:, 2:])) <= {0.0, 1.0}

    def test_level_drop_exceeds_twenty_units(self):
        ds = synth_generate(SynthConfig(n_instances=400, anomaly_fraction=0.1, seed=3))
        airspeed = ds.instances[:, 0]
        trend = np.median(np.diff(airspeed, axis=1), axis=0)
        drops = -np.min(np.diff(airspeed, axis=1) - trend, axis=1)
        assert np.all(drops[ds.labels == 1] > 20.0)
        assert np.all(drops[ds.labels == 0] < 20.0)

    def test_delayed_step_moves_the_onset(self):
        cfg = SynthConfig(
            n_instances=200, anomaly_fraction=0.1, anomaly_kind=AnomalyKind.DELAYED_STEP, seed=6
        )
        ds = synth_generate(cfg)
        event = ds.instances[:, -1]
        assert np.all(event.max(axis=1) == 1.0)
        onset = np.argmax(event > 0.5, axis=1) / ds.window_len
        assert np.all(onset[ds.labels == 1] >= 0.8)
        assert np.all(onset[ds.labels == 0] <= 0.5 + 1 / ds.window_len)

    @pytest.mark.parametrize(
        "overrides",
        [
            {"anomaly_fraction": 0.5},
            {"window_len": 4},
            {"binary_channels": 7},
            {"binary_channels": 0, "anomaly_kind": AnomalyKind.DELAYED_STEP},
        ],
    )
    def test_invalid_config(self, overrides):
        with pytest.raises(ConfigurationError):
            SynthConfig(**overrides)
