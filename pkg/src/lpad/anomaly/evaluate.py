"""
End-to-end evaluation of a trained model.

Each of the ``samples`` passes re-draws posterior noise only; the datasets are
scored in their canonical order. Per pass, the training scores are transformed
and a threshold is fitted; the reported threshold is the mean over passes.
Test scores are transformed per pass and averaged per instance.
"""

import logging
from typing import Any, Optional

import numpy as np

from lpad.anomaly.metrics import metrics
from lpad.anomaly.report import EvalReport, ThresholdSource
from lpad.anomaly.scoring import ScoreTransform, ScoreVector, apply_transform, score_batch
from lpad.anomaly.threshold import classify, fit_threshold
from lpad.core.exceptions import ConfigurationError
from lpad.datapipe.dataset import Dataset
from lpad.vae.model import VaeModel
from lpad.vae.trainer import reconstruct

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 10
SCORE_CHUNK = 256


def score_pass(
    model: VaeModel,
    ds: Dataset,
    rng: np.random.Generator,
    transform: ScoreTransform = ScoreTransform.NONE,
) -> ScoreVector:
    """One reconstruction of every instance of ``ds`` (canonical order), scored and transformed."""
    metric = model.spec.recon_metric
    order = ds.canonical_order()
    values = np.empty(len(ds))
    for start in range(0, len(ds), SCORE_CHUNK):
        idx = order[start : start + SCORE_CHUNK]
        x = ds.instances[idx]
        (x_hat,) = reconstruct(model, x, 1, rng)
        values[start : start + len(idx)] = score_batch(x, x_hat, metric, ds.channel_names)
    return apply_transform(ScoreVector(values=values, metric=metric), transform)


def averaged_scores(
    model: VaeModel,
    ds: Dataset,
    samples: int,
    rng: np.random.Generator,
    transform: ScoreTransform = ScoreTransform.NONE,
) -> ScoreVector:
    """Per-instance mean of ``samples`` transformed score passes."""
    passes = [score_pass(model, ds, rng, transform) for _ in range(samples)]
    mean = np.mean([p.values for p in passes], axis=0)
    return passes[0].model_copy(update={"values": mean})


def resolve_threshold(
    source: ThresholdSource, self_threshold: float, source_threshold: Optional[float]
) -> float:
    """Picks the threshold for ``source``.

    Raises:
        ConfigurationError: If ``source_run`` or ``mixed`` is requested without
            a source threshold.
    """
    source = ThresholdSource(source)
    if source == ThresholdSource.SELF:
        return self_threshold
    if source_threshold is None:
        raise ConfigurationError(f"threshold_source '{source.value}' needs a source threshold")
    if source == ThresholdSource.SOURCE_RUN:
        return source_threshold
    return 0.5 * (self_threshold + source_threshold)


def training_threshold(
    model: VaeModel,
    train_ds: Dataset,
    samples: int,
    rng: np.random.Generator,
    transform: ScoreTransform,
    anomaly_fraction: float,
) -> tuple[float, bool]:
    """Mean over ``samples`` passes of the fitted threshold, and whether any pass was degenerate."""
    fits = [fit_threshold(score_pass(model, train_ds, rng, transform), anomaly_fraction) for _ in range(samples)]
    return float(np.mean([f.value for f in fits])), any(f.degenerate for f in fits)


def evaluate_model(
    model: VaeModel,
    train_ds: Dataset,
    test_ds: Dataset,
    samples: int = DEFAULT_SAMPLES,
    rng: Optional[np.random.Generator] = None,
    seed: int = 0,
    transform: Optional[ScoreTransform] = None,
    threshold_source: ThresholdSource = ThresholdSource.SELF,
    source_threshold: Optional[float] = None,
    anomaly_fraction: Optional[float] = None,
    config: Optional[dict[str, Any]] = None,
) -> EvalReport:
    """Thresholds on ``train_ds``, classifies ``test_ds`` and scores the result.

    Args:
        model (VaeModel): A trained model.
        train_ds (Dataset): Training set the threshold is fitted on.
        test_ds (Dataset): Instances to classify.
        samples (int): Score passes per dataset.
        rng (Optional[np.random.Generator]): Posterior noise; defaults to a
            generator seeded with ``seed``.
        seed (int): Recorded in the report, and seeds ``rng`` when it is absent.
        transform (Optional[ScoreTransform]): Defaults to ``log`` for mse
            models and ``none`` for bce models.
        threshold_source (ThresholdSource): See :class:`ThresholdSource`.
        source_threshold (Optional[float]): Threshold of the source run, on
            the same transformed scale.
        anomaly_fraction (Optional[float]): Used when the training labels
            contain no anomaly.
        config (Optional[dict[str, Any]]): Configuration snapshot to embed.

    Raises:
        ConfigurationError: If ``samples < 1`` or no anomaly fraction is known.
    """
    if samples < 1:
        raise ConfigurationError(f"samples must be at least 1, got {samples}")
    rng = rng if rng is not None else np.random.default_rng([seed, 4])
    metric = model.spec.recon_metric
    transform = ScoreTransform(transform) if transform is not None else ScoreTransform.default_for(metric)
    flags: list[str] = []

    fraction = train_ds.anomaly_fraction
    if not 0.0 < fraction < 1.0:
        if anomaly_fraction is None:
            raise ConfigurationError("training labels hold no anomaly and no anomaly_fraction is configured")
        fraction = anomaly_fraction
        flags.append("anomaly_fraction_from_config")

    self_threshold, degenerate = training_threshold(model, train_ds, samples, rng, transform, fraction)
    if degenerate:
        flags.append("degenerate_threshold")
    thr = resolve_threshold(threshold_source, self_threshold, source_threshold)

    test_scores = averaged_scores(model, test_ds, samples, rng, transform)
    order = test_ds.canonical_order()
    truth = test_ds.labels[order]
    predicted = classify(test_scores, thr)
    detection = metrics(predicted, truth)
    flags.extend(f"undefined_{name}" for name in detection.undefined)

    report = EvalReport(
        threshold=thr,
        threshold_source=threshold_source,
        self_threshold=self_threshold,
        source_threshold=source_threshold,
        anomaly_fraction=fraction,
        metric=metric,
        transform=transform,
        samples=samples,
        instance_ids=test_ds.instance_ids[order].tolist(),
        scores=test_scores.values.tolist(),
        predicted=predicted.tolist(),
        truth=truth.tolist(),
        precision=detection.precision,
        recall=detection.recall,
        f1=detection.f1,
        flags=flags,
        config=dict(config or {}),
        seeds={"evaluation": seed},
    )
    logger.info(
        "Evaluated %s: threshold %.6g (%s), precision %.3f, recall %.3f, f1 %.3f",
        test_ds,
        thr,
        ThresholdSource(threshold_source).value,
        report.precision,
        report.recall,
        report.f1,
    )
    return report
