"""
Deterministic synthetic flight-like recordings with injected anomalies.

Channel 0 is an airspeed-like ramp; the other continuous channels are noisy
sinusoids on a linear trend; binary channels switch from 0 to 1 once at an
onset time. Anomalies are either a mid-window drop of channel 0 by more than
25 units (``level_drop``) or a late onset of the last binary channel
(``delayed_step``).
"""

import logging
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from lpad.core.exceptions import ConfigurationError
from lpad.datapipe.dataset import ChannelKind, Dataset

logger = logging.getLogger(__name__)


class AnomalyKind(str, Enum):
    LEVEL_DROP = "level_drop"
    DELAYED_STEP = "delayed_step"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {kind.value for kind in cls}


class SynthConfig(BaseModel):
    """Generator settings. ``binary_channels`` of the ``channels`` are binary."""

    model_config = ConfigDict(frozen=True)

    n_instances: int = 2000
    channels: int = 7
    binary_channels: int = 2
    window_len: int = 60
    anomaly_fraction: float = 0.05
    anomaly_kind: AnomalyKind = AnomalyKind.LEVEL_DROP
    seed: int = 1

    @field_validator("n_instances", "channels", "window_len")
    @classmethod
    def _validate_positive(cls, value: int, info) -> int:
        if value < 1:
            raise ConfigurationError(f"{info.field_name} must be at least 1, got {value}")
        return value

    @field_validator("window_len")
    @classmethod
    def _validate_window(cls, value: int) -> int:
        if value < 8:
            raise ConfigurationError(f"window_len must be at least 8, got {value}")
        return value

    @field_validator("anomaly_fraction")
    @classmethod
    def _validate_fraction(cls, value: float) -> float:
        if not 0.0 < value < 0.5:
            raise ConfigurationError(f"anomaly_fraction must lie in (0, 0.5), got {value}")
        return value

    @model_validator(mode="after")
    def _validate_channels(self) -> "SynthConfig":
        if not 0 <= self.binary_channels < self.channels:
            raise ConfigurationError(
                "binary_channels must be non-negative and leave at least one continuous channel"
            )
        if self.anomaly_kind == AnomalyKind.DELAYED_STEP and self.binary_channels == 0:
            raise ConfigurationError("anomaly_kind 'delayed_step' needs a binary channel")
        return self


def _channel_names(cfg: SynthConfig) -> list[str]:
    continuous = cfg.channels - cfg.binary_channels
    names = ["airspeed"] + [f"sensor{i}" for i in range(1, continuous)]
    return names + [f"event{j}" for j in range(cfg.binary_channels)]


def synth_generate(cfg: SynthConfig) -> Dataset:
    """Generates ``cfg.n_instances`` instances with exactly
    ``floor(anomaly_fraction * n_instances)`` anomalies. Same seed, same bits."""
    rng = np.random.default_rng(cfg.seed)
    n, steps = cfg.n_instances, cfg.window_len
    continuous = cfg.channels - cfg.binary_channels
    t = np.arange(steps) / steps
    data = np.empty((n, cfg.channels, steps))

    start = rng.uniform(120.0, 140.0, size=(n, 1))
    gain = rng.uniform(20.0, 40.0, size=(n, 1))
    data[:, 0] = start + gain * t + rng.normal(0.0, 1.0, size=(n, steps))
    for c in range(1, continuous):
        amplitude = rng.uniform(0.5, 1.5, size=(n, 1))
        frequency = rng.uniform(0.5, 2.0, size=(n, 1))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, 1))
        trend = rng.uniform(-1.0, 1.0, size=(n, 1))
        wave = amplitude * np.sin(2.0 * np.pi * frequency * t + phase)
        data[:, c] = wave + trend * t + rng.normal(0.0, 0.1, size=(n, steps))
    onsets = rng.uniform(0.2, 0.5, size=(n, cfg.binary_channels))
    for j in range(cfg.binary_channels):
        data[:, continuous + j] = (t[None, :] >= onsets[:, j : j + 1]).astype(float)

    count = int(np.floor(cfg.anomaly_fraction * n))
    anomalous = np.sort(rng.permutation(n)[:count])
    labels = np.zeros(n, dtype=np.int64)
    labels[anomalous] = 1
    if cfg.anomaly_kind == AnomalyKind.LEVEL_DROP:
        depth = rng.uniform(25.0, 40.0, size=count)
        begin = rng.uniform(0.4, 0.5, size=count)
        length = rng.uniform(0.2, 0.3, size=count)
        for i, d, b, span in zip(anomalous, depth, begin, length):
            data[i, 0] -= d * ((t >= b) & (t < b + span))
    else:
        late = rng.uniform(0.8, 0.95, size=count)
        for i, onset in zip(anomalous, late):
            data[i, cfg.channels - 1] = (t >= onset).astype(float)

    kinds = [ChannelKind.CONTINUOUS] * continuous + [ChannelKind.BINARY] * cfg.binary_channels
    ds = Dataset(data, labels, channel_names=_channel_names(cfg), channel_kinds=kinds)
    logger.info("Generated synthetic %s (%s, seed %d)", ds, cfg.anomaly_kind.value, cfg.seed)
    return ds
