"""
Quantile thresholds under a normal assumption on the training scores.

``thr = mean(scores) + z * sd(scores)`` with ``z`` the standard-normal quantile
of ``1 - anomaly_fraction`` and ``sd`` the population standard deviation.
Instances scoring at or above the threshold are anomalous.
"""

import logging

import numpy as np
from pydantic import BaseModel
from scipy.optimize import brentq
from scipy.special import ndtr

from lpad.anomaly.scoring import ScoreVector
from lpad.core.exceptions import DomainError

logger = logging.getLogger(__name__)

_QUANTILE_BRACKET = 40.0


def normal_quantile(p: float) -> float:
    """The ``z`` with ``Phi(z) = p``, found by Brent's method on ``scipy.special.ndtr``.

    Raises:
        DomainError: If ``p`` is not strictly between 0 and 1.
    """
    if not 0.0 < p < 1.0:
        raise DomainError(f"quantile probability must lie in (0, 1), got {p}")
    if p == 0.5:
        return 0.0
    return float(
        brentq(lambda z: ndtr(z) - p, -_QUANTILE_BRACKET, _QUANTILE_BRACKET, xtol=1e-15, maxiter=500)
    )


class Threshold(BaseModel):
    """A fitted threshold and the statistics it was derived from.

    ``degenerate`` is set when the scores are constant; the threshold is then
    their mean.
    """

    value: float
    mean: float
    sd: float
    z: float
    anomaly_fraction: float
    degenerate: bool = False


def fit_threshold(train_scores: ScoreVector, anomaly_fraction: float) -> Threshold:
    """Fits the quantile threshold on (already transformed) training scores.

    Raises:
        DomainError: If ``anomaly_fraction`` is not in ``(0, 1)`` or there are no scores.
    """
    if not 0.0 < anomaly_fraction < 1.0:
        raise DomainError(f"anomaly_fraction must lie in (0, 1), got {anomaly_fraction}")
    if len(train_scores) == 0:
        raise DomainError("cannot fit a threshold on zero scores")
    values = train_scores.values
    mean = float(np.mean(values))
    sd = float(np.std(values))
    z = normal_quantile(1.0 - anomaly_fraction)
    if sd == 0.0:
        logger.warning("Training scores are constant (%g); threshold falls back to their mean", mean)
        return Threshold(value=mean, mean=mean, sd=0.0, z=z, anomaly_fraction=anomaly_fraction, degenerate=True)
    return Threshold(value=mean + z * sd, mean=mean, sd=sd, z=z, anomaly_fraction=anomaly_fraction)


def threshold(train_scores: ScoreVector, anomaly_fraction: float) -> float:
    """``mean + normal_quantile(1 - anomaly_fraction) * sd`` of the training scores."""
    return fit_threshold(train_scores, anomaly_fraction).value


def classify(scores, thr: float) -> np.ndarray:
    """1 where ``score >= thr``, else 0."""
    values = scores.values if isinstance(scores, ScoreVector) else np.asarray(scores, dtype=np.float64)
    return (values >= thr).astype(np.int64)
