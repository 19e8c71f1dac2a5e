"""Seeded, label-stratified splitting into disjoint subsets."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from lpad.core.exceptions import ConfigurationError
from lpad.datapipe.dataset import Dataset

logger = logging.getLogger(__name__)


class SplitSpec(BaseModel):
    """Split fractions (positive, summing to 1) and the permutation seed."""

    model_config = ConfigDict(frozen=True)

    fractions: tuple[float, ...] = (0.6, 0.2, 0.2)
    seed: int = 0

    @field_validator("fractions")
    @classmethod
    def _validate_fractions(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(f <= 0 for f in value):
            raise ConfigurationError(f"split fractions must be positive, got {value}")
        if abs(sum(value) - 1.0) > 1e-9:
            raise ConfigurationError(f"split fractions must sum to 1, got {sum(value)}")
        return value


def _split_sizes(n: int, fractions: tuple[float, ...]) -> list[int]:
    sizes = [int(np.floor(f * n + 1e-9)) for f in fractions]
    sizes[0] += n - sum(sizes)
    return sizes


def _allocate(total: int, sizes: list[int], n: int) -> list[int]:
    """Largest-remainder allocation of ``total`` items proportionally to ``sizes``."""
    exact = [total * s / n for s in sizes]
    counts = [int(np.floor(e)) for e in exact]
    remainders = sorted(range(len(sizes)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in remainders[: total - sum(counts)]:
        counts[i] += 1
    return [min(c, s) for c, s in zip(counts, sizes)]


def split(ds: Dataset, spec: SplitSpec) -> list[Dataset]:
    """Partitions ``ds`` into ``len(spec.fractions)`` disjoint datasets.

    Split ``i`` gets ``floor(f_i * N)`` instances and the first split also
    takes the remainder. Anomalous and nominal instances are permuted
    separately with a seed-derived permutation and dealt out so that each
    split's anomaly count is proportional to its size. The result does not
    depend on the storage order of ``ds``.

    Raises:
        ConfigurationError: If any split would be empty.
    """
    n = len(ds)
    sizes = _split_sizes(n, spec.fractions)
    if any(size == 0 for size in sizes):
        raise ConfigurationError(f"split of {n} instances by {spec.fractions} leaves an empty split")

    rng = np.random.default_rng(spec.seed)
    order = ds.canonical_order()
    anomalous = order[ds.labels[order] == 1]
    nominal = order[ds.labels[order] == 0]
    anomalous = anomalous[rng.permutation(len(anomalous))]
    nominal = nominal[rng.permutation(len(nominal))]

    anomaly_counts = _allocate(len(anomalous), sizes, n)
    parts, a_start, n_start = [], 0, 0
    for size, a_count in zip(sizes, anomaly_counts):
        n_count = size - a_count
        indices = np.concatenate(
            [anomalous[a_start : a_start + a_count], nominal[n_start : n_start + n_count]]
        )
        a_start += a_count
        n_start += n_count
        indices = indices[np.argsort(ds.instance_ids[indices], kind="stable")]
        parts.append(ds.subset(indices))
    logger.debug("Split %d instances into %s", n, [len(p) for p in parts])
    return parts
