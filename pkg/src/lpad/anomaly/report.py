"""
Evaluation reports and their file formats.

An :class:`EvalReport` is written as a JSON summary plus a per-instance CSV
(``instance_id, score, predicted, truth``). Both carry the configuration
snapshot so that a run can be reproduced from its artifacts.
"""

import json
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from lpad.anomaly.metrics import f1_score
from lpad.anomaly.scoring import ScoreTransform
from lpad.core.exceptions import ConfigurationError
from lpad.datapipe.io import snapshot_lines, write_table
from lpad.vae.spec import ReconMetric

logger = logging.getLogger(__name__)


class ThresholdSource(str, Enum):
    """Which training scores the threshold is fitted on.

    * SELF: the model's own training set.

    * SOURCE_RUN: the threshold of the run the model was transferred from.

    * MIXED: the average of the two.
    """

    SELF = "self"
    SOURCE_RUN = "source_run"
    MIXED = "mixed"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {source.value for source in cls}


class EvalReport(BaseModel):
    """Scores, labels, threshold and detection metrics of one evaluation."""

    threshold: float
    threshold_source: ThresholdSource = ThresholdSource.SELF
    self_threshold: float
    source_threshold: Optional[float] = None
    anomaly_fraction: float
    metric: ReconMetric
    transform: ScoreTransform
    samples: int
    instance_ids: list[Any]
    scores: list[float]
    predicted: list[int]
    truth: list[int]
    precision: float
    recall: float
    f1: float
    flags: list[str] = Field(default_factory=list)
    config: dict[str, Any] = Field(default_factory=dict)
    seeds: dict[str, int] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _validate_consistency(self) -> "EvalReport":
        n = len(self.scores)
        if not len(self.instance_ids) == len(self.predicted) == len(self.truth) == n:
            raise ConfigurationError("report columns must have one entry per instance")
        if self.precision + self.recall > 0 and abs(self.f1 - f1_score(self.precision, self.recall)) > 1e-12:
            raise ConfigurationError("f1 must be the harmonic mean of precision and recall")
        return self

    def summary(self) -> dict[str, Any]:
        return self.model_dump(mode="json", exclude={"instance_ids", "scores", "predicted", "truth"})

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "instance_id": self.instance_ids,
                "score": self.scores,
                "predicted": self.predicted,
                "truth": self.truth,
            }
        )

    def write(self, directory: Union[str, Path], stem: str = "eval") -> tuple[Path, Path]:
        """Writes ``<stem>.json`` and ``<stem>_scores.csv`` into ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        json_path = directory / f"{stem}.json"
        json_path.write_text(json.dumps(self.summary(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        csv_path = write_table(self.to_frame(), directory / f"{stem}_scores.csv", snapshot_lines(self.config))
        logger.info("Evaluation report written to %s and %s", json_path, csv_path)
        return json_path, csv_path


def score_histogram(report: EvalReport, bins: int = 30) -> pd.DataFrame:
    """Counts of nominal and anomalous instances per score bin.

    Bins are equally wide over the range of the scores; the threshold is
    included in the range so that it can be drawn against the histogram.
    """
    if bins < 1:
        raise ConfigurationError(f"bins must be at least 1, got {bins}")
    scores = np.asarray(report.scores)
    truth = np.asarray(report.truth)
    low = min(float(scores.min()), report.threshold)
    high = max(float(scores.max()), report.threshold)
    edges = np.histogram_bin_edges(scores, bins=bins, range=(low, high) if high > low else None)
    nominal, _ = np.histogram(scores[truth == 0], bins=edges)
    anomalous, _ = np.histogram(scores[truth == 1], bins=edges)
    return pd.DataFrame(
        {"bin_left": edges[:-1], "bin_right": edges[1:], "nominal": nominal, "anomalous": anomalous}
    )


class RepeatSummary(BaseModel):
    """Mean and population standard deviation of the metrics over repeated models."""

    repeats: int
    precision_mean: float
    precision_sd: float
    recall_mean: float
    recall_sd: float
    f1_mean: float
    f1_sd: float


def summarize_repeats(reports: Sequence[EvalReport]) -> RepeatSummary:
    if not reports:
        raise ConfigurationError("no reports to summarize")
    table = pd.DataFrame([{"precision": r.precision, "recall": r.recall, "f1": r.f1} for r in reports])
    means, sds = table.mean(), table.std(ddof=0)
    return RepeatSummary(
        repeats=len(reports),
        precision_mean=float(means["precision"]),
        precision_sd=float(sds["precision"]),
        recall_mean=float(means["recall"]),
        recall_sd=float(sds["recall"]),
        f1_mean=float(means["f1"]),
        f1_sd=float(sds["f1"]),
    )
