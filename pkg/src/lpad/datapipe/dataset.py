"""Windowed multichannel time series with instance labels."""

from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from lpad.core.exceptions import ConfigurationError, ShapeError


class ChannelKind(str, Enum):
    CONTINUOUS = "continuous"
    BINARY = "binary"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class NormMode(str, Enum):
    """Per-channel normalization.

    * ZSCORE: ``(x - mean) / sd`` with the population standard deviation.

    * MINMAX: ``(x - min) / (max - min)``.
    """

    ZSCORE = "zscore"
    MINMAX = "minmax"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {mode.value for mode in cls}


class NormStats(BaseModel):
    """Fitted normalization statistics.

    Attributes:
        mode (NormMode): The normalization these statistics belong to.
        center (tuple[float, ...]): Per-channel mean (zscore) or minimum (minmax).
        scale (tuple[float, ...]): Per-channel sd (zscore) or range (minmax).
            Degenerate channels have scale 1.
        flagged (tuple[int, ...]): Channels with zero sd or range; they are
            only centered.
    """

    model_config = ConfigDict(frozen=True)

    mode: NormMode
    center: tuple[float, ...]
    scale: tuple[float, ...]
    flagged: tuple[int, ...] = ()


class Dataset:
    """Instances ``(N, C, T)`` with binary labels and per-channel metadata.

    Args:
        instances (np.ndarray): Real values, ``(N, C, T)``.
        labels (np.ndarray): ``(N,)``, 1 marks an anomalous instance.
        instance_ids (Optional[Sequence]): Stable identifiers; defaults to
            ``0 .. N-1``.
        channel_names (Optional[Sequence[str]]): Defaults to ``ch0 .. ch{C-1}``.
        channel_kinds (Optional[Sequence[ChannelKind]]): Defaults to continuous.
        norm_stats (Optional[NormStats]): Set by ``normalize``.

    Raises:
        ShapeError: If the arrays disagree in size.
    """

    def __init__(
        self,
        instances: np.ndarray,
        labels: np.ndarray,
        instance_ids: Optional[Sequence] = None,
        channel_names: Optional[Sequence[str]] = None,
        channel_kinds: Optional[Sequence[ChannelKind]] = None,
        norm_stats: Optional[NormStats] = None,
    ):
        instances = np.asarray(instances, dtype=float)
        labels = np.asarray(labels).astype(np.int64)
        if instances.ndim != 3:
            raise ShapeError("dataset", "instances must be (N, C, T)", instances.shape)
        n, channels, _ = instances.shape
        if labels.shape != (n,):
            raise ShapeError("dataset", f"labels must have length {n}", labels.shape)
        if not np.isin(labels, (0, 1)).all():
            raise ConfigurationError("labels must be 0 or 1")
        self.instances = instances
        self.labels = labels
        self.instance_ids = np.asarray(instance_ids if instance_ids is not None else np.arange(n))
        if self.instance_ids.shape != (n,):
            raise ShapeError("dataset", f"instance_ids must have length {n}", self.instance_ids.shape)
        self.channel_names = list(channel_names or [f"ch{i}" for i in range(channels)])
        self.channel_kinds = [
            ChannelKind(kind) for kind in (channel_kinds or [ChannelKind.CONTINUOUS] * channels)
        ]
        if len(self.channel_names) != channels or len(self.channel_kinds) != channels:
            raise ShapeError(
                "dataset",
                f"channel metadata must describe {channels} channels",
                (len(self.channel_names), len(self.channel_kinds)),
            )
        self.norm_stats = norm_stats

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        return (
            f"Dataset(n={len(self)}, channels={self.channels}, window_len={self.window_len}, "
            f"anomalies={int(self.labels.sum())})"
        )

    @property
    def channels(self) -> int:
        return self.instances.shape[1]

    @property
    def window_len(self) -> int:
        return self.instances.shape[2]

    @property
    def anomaly_fraction(self) -> float:
        return float(self.labels.mean()) if len(self) else 0.0

    def subset(self, indices: Sequence[int]) -> "Dataset":
        """A new dataset holding copies of the selected instances, in the given order."""
        indices = np.asarray(indices, dtype=np.int64)
        return self._replace(
            instances=self.instances[indices].copy(),
            labels=self.labels[indices].copy(),
            instance_ids=self.instance_ids[indices].copy(),
        )

    def canonical_order(self) -> np.ndarray:
        """Indices sorting the instances by id, independent of storage order."""
        return np.argsort(self.instance_ids, kind="stable")

    def _replace(self, **changes) -> "Dataset":
        fields = {
            "instances": self.instances,
            "labels": self.labels,
            "instance_ids": self.instance_ids,
            "channel_names": self.channel_names,
            "channel_kinds": self.channel_kinds,
            "norm_stats": self.norm_stats,
        }
        fields.update(changes)
        return Dataset(**fields)


def concat_datasets(*datasets: Dataset) -> Dataset:
    """Stacks datasets with identical channel layout and normalization.

    Raises:
        ConfigurationError: If the channel layout or statistics differ.
    """
    if not datasets:
        raise ConfigurationError("concat_datasets needs at least one dataset")
    first = datasets[0]
    for other in datasets[1:]:
        if other.channel_names != first.channel_names or other.window_len != first.window_len:
            raise ConfigurationError("datasets to concatenate must share channels and window_len")
        if other.norm_stats != first.norm_stats:
            raise ConfigurationError("datasets to concatenate must share normalization statistics")
    return first._replace(
        instances=np.concatenate([d.instances for d in datasets]),
        labels=np.concatenate([d.labels for d in datasets]),
        instance_ids=np.concatenate([d.instance_ids for d in datasets]),
    )
