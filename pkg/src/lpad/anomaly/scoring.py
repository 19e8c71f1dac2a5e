"""
Reconstruction-error anomaly scores and monotone score transforms.

Per-instance MSE is the mean over all ``channels * time`` elements, so that
scores and thresholds do not depend on the window length. Per-instance BCE is
the sum over elements of ``-[x log x_hat + (1 - x) log(1 - x_hat)]`` with
``x_hat`` clamped to ``[1e-7, 1 - 1e-7]``.
"""

import logging
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from lpad.core.exceptions import DomainError, NonFiniteError, ShapeError
from lpad.vae.spec import ReconMetric

logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-7
SCORE_FLOOR = 1e-12


class ScoreTransform(str, Enum):
    """Monotone maps applied to scores before thresholding.

    * NONE: identity.

    * LOG: natural log of the floored score.

    * SQRT: square root.

    * INVERSE: ``-1 / score`` of the floored score, negated so that larger
      errors stay larger.
    """

    NONE = "none"
    LOG = "log"
    SQRT = "sqrt"
    INVERSE = "inverse"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {transform.value for transform in cls}

    @classmethod
    def default_for(cls, metric: ReconMetric) -> "ScoreTransform":
        return cls.LOG if ReconMetric(metric) == ReconMetric.MSE else cls.NONE


class ScoreVector(BaseModel):
    """Per-instance scores with the metric and the transform they carry."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    metric: ReconMetric
    transform: ScoreTransform = ScoreTransform.NONE

    @field_validator("values")
    @classmethod
    def _validate_values(cls, value: np.ndarray) -> np.ndarray:
        value = np.asarray(value, dtype=np.float64)
        if value.ndim != 1:
            raise ShapeError("ScoreVector", "scores must be a vector", value.shape)
        bad = np.flatnonzero(~np.isfinite(value))
        if bad.size:
            raise NonFiniteError(f"score of instance {bad[0]} is not finite", index=int(bad[0]), term="score")
        return value

    @property
    def transformed(self) -> bool:
        return self.transform != ScoreTransform.NONE

    def __len__(self) -> int:
        return len(self.values)


def _check_pair(x: np.ndarray, x_hat: np.ndarray) -> None:
    if x.shape != x_hat.shape:
        raise ShapeError("score", f"x and x_hat differ in shape: {x.shape} vs {x_hat.shape}", x_hat.shape)


def _check_probabilities(x: np.ndarray, channel_names: Optional[Sequence[str]]) -> None:
    outside = (x < 0.0) | (x > 1.0)
    if outside.any():
        channel = int(np.argwhere(outside)[0][-2])
        name = channel_names[channel] if channel_names else f"ch{channel}"
        raise DomainError(f"bce scores need data in [0, 1]; channel '{name}' has values outside")


def score_batch(
    x: np.ndarray,
    x_hat: np.ndarray,
    metric: ReconMetric,
    channel_names: Optional[Sequence[str]] = None,
) -> np.ndarray:
    """Scores of a batch ``(batch, channels, time)``, one per instance.

    Raises:
        ShapeError: If the shapes differ or are not three-dimensional.
        DomainError: For bce with ``x`` outside ``[0, 1]``; the message names
            the channel.
    """
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    _check_pair(x, x_hat)
    if x.ndim != 3:
        raise ShapeError("score_batch", "expected (batch, channels, time)", x.shape)
    if ReconMetric(metric) == ReconMetric.MSE:
        return np.mean((x - x_hat) ** 2, axis=(1, 2))
    _check_probabilities(x, channel_names)
    p = np.clip(x_hat, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return -np.sum(x * np.log(p) + (1.0 - x) * np.log1p(-p), axis=(1, 2))


def score(
    x: np.ndarray,
    x_hat: np.ndarray,
    metric: ReconMetric,
    channel_names: Optional[Sequence[str]] = None,
) -> float:
    """Score of a single instance of any shape (typically ``(channels, time)``)."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    _check_pair(x, x_hat)
    x3 = x.reshape((1,) + (1,) * max(0, 2 - x.ndim) + x.shape)
    return float(score_batch(x3, x_hat.reshape(x3.shape), metric, channel_names)[0])


def apply_transform(scores: ScoreVector, transform: ScoreTransform) -> ScoreVector:
    """Applies ``transform`` to untransformed scores.

    Raises:
        DomainError: If ``scores`` already carry a transform other than ``none``
            and ``transform`` is not ``none``.
    """
    transform = ScoreTransform(transform)
    if transform == ScoreTransform.NONE:
        return scores
    if scores.transformed:
        raise DomainError(f"scores are already transformed with '{scores.transform.value}'")
    floored = np.maximum(scores.values, SCORE_FLOOR)
    if transform == ScoreTransform.LOG:
        values = np.log(floored)
    elif transform == ScoreTransform.SQRT:
        values = np.sqrt(np.maximum(scores.values, 0.0))
    else:
        values = -1.0 / floored
    return scores.model_copy(update={"values": values, "transform": transform})


def log_transform(scores: ScoreVector) -> ScoreVector:
    """Natural log of the scores, floored at ``1e-12``."""
    return apply_transform(scores, ScoreTransform.LOG)
