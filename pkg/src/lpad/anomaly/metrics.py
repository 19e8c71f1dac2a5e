"""Precision, recall and F1 over instance labels."""

import logging

import numpy as np
from pydantic import BaseModel
from sklearn.metrics import confusion_matrix

from lpad.core.exceptions import ShapeError

logger = logging.getLogger(__name__)


class DetectionMetrics(BaseModel):
    """Detection quality of one labelling.

    Attributes:
        undefined (tuple[str, ...]): Ratios whose denominator was zero; they
            are reported as 0.
    """

    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int
    undefined: tuple[str, ...] = ()


def f1_score(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def metrics(pred, truth) -> DetectionMetrics:
    """Counts TP, FP and FN over instances and derives precision, recall and F1.

    Raises:
        ShapeError: If the label vectors differ in length.
    """
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ShapeError("metrics", f"{len(pred)} predictions for {len(truth)} labels", (len(pred), len(truth)))
    tn, fp, fn, tp = (int(c) for c in confusion_matrix(truth, pred, labels=[0, 1]).ravel())

    undefined = []
    if tp + fp == 0:
        undefined.append("precision")
    if tp + fn == 0:
        undefined.append("recall")
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = f1_score(precision, recall)
    if undefined:
        logger.warning("Undefined detection ratios reported as 0: %s", ", ".join(undefined))
    return DetectionMetrics(
        precision=precision, recall=recall, f1=f1, tp=tp, fp=fp, fn=fn, tn=tn, undefined=tuple(undefined)
    )
