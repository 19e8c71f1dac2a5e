import logging
from typing import Optional

import numpy as np

from lpad.core.exceptions import ConfigurationError
from lpad.datapipe.dataset import Dataset, NormMode, NormStats

logger = logging.getLogger(__name__)


def fit_stats(ds: Dataset, mode: NormMode) -> NormStats:
    """Per-channel statistics over all instances and time steps of ``ds``."""
    mode = NormMode(mode)
    values = ds.instances.transpose(1, 0, 2).reshape(ds.channels, -1)
    if mode == NormMode.ZSCORE:
        center = values.mean(axis=1)
        scale = values.std(axis=1)
    else:
        center = values.min(axis=1)
        scale = values.max(axis=1) - center
    flagged = tuple(int(i) for i in np.flatnonzero(scale == 0))
    if flagged:
        names = [ds.channel_names[i] for i in flagged]
        logger.warning("Channels %s have zero spread; they are only centered", names)
    scale = np.where(scale == 0, 1.0, scale)
    return NormStats(
        mode=mode,
        center=tuple(float(c) for c in center),
        scale=tuple(float(s) for s in scale),
        flagged=flagged,
    )


def normalize(ds: Dataset, mode: NormMode, stats: Optional[NormStats] = None) -> Dataset:
    """Normalizes every channel, fitting statistics on ``ds`` unless ``stats`` is given.

    Reused statistics (for validation, test or transfer data) may map values
    outside ``[0, 1]`` in minmax mode; they are not clipped here. A dataset
    that already carries the requested statistics is returned unchanged.

    Args:
        ds (Dataset): Raw dataset.
        mode (NormMode): ``zscore`` or ``minmax``.
        stats (Optional[NormStats]): Statistics to reuse.

    Returns:
        Dataset: A new dataset with ``norm_stats`` set.

    Raises:
        ConfigurationError: If ``stats`` belong to another mode, or ``ds`` was
            already normalized with different statistics.
    """
    mode = NormMode(mode)
    if stats is not None and stats.mode != mode:
        raise ConfigurationError(
            f"normalization mode '{mode.value}' does not match stats mode '{stats.mode.value}'"
        )
    if ds.norm_stats is not None:
        if stats is None and ds.norm_stats.mode == mode:
            return ds.subset(np.arange(len(ds)))
        if stats == ds.norm_stats:
            return ds.subset(np.arange(len(ds)))
        raise ConfigurationError("dataset is already normalized with different statistics")
    if stats is None:
        stats = fit_stats(ds, mode)
    center = np.asarray(stats.center)[None, :, None]
    scale = np.asarray(stats.scale)[None, :, None]
    return ds._replace(instances=(ds.instances - center) / scale, norm_stats=stats)


def clip_unit(ds: Dataset) -> Dataset:
    """Clips every value into ``[0, 1]``.

    Data min-max normalized with statistics fitted on another split can leave
    the unit interval, which bce scoring does not accept.
    """
    clipped = np.clip(ds.instances, 0.0, 1.0)
    outside = int(np.count_nonzero(clipped != ds.instances))
    if outside:
        logger.info("Clipped %d values of %s into [0, 1]", outside, ds)
    return ds._replace(instances=clipped)
