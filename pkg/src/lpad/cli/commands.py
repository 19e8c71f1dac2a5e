"""
The five commands: ``synth``, ``train``, ``eval``, ``transfer`` and ``sweep``.

Repeats and sweep cells are independent jobs. With more than one worker they
run in a process pool; results are merged in job order, so the artifacts do
not depend on the worker count. Repeat ``r`` uses seed ``seed + r`` and writes
to ``<output_dir>/repeat_<r>/``; ``eval`` and ``transfer`` reuse a checkpoint
found there.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from pathlib import Path
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd

from lpad.anomaly.evaluate import evaluate_model, training_threshold
from lpad.anomaly.report import EvalReport, ThresholdSource, score_histogram, summarize_repeats
from lpad.anomaly.scoring import ScoreTransform
from lpad.cli.config import RunConfig
from lpad.core.exceptions import ConfigurationError, ShapeError
from lpad.datapipe.dataset import Dataset, NormMode, NormStats, concat_datasets
from lpad.datapipe.io import CsvSchema, export_csv, load_csv, snapshot_lines, write_table
from lpad.datapipe.normalize import clip_unit, fit_stats, normalize
from lpad.datapipe.split import SplitSpec, split
from lpad.datapipe.synth import synth_generate
from lpad.diffcore.checkpoint import load_checkpoint
from lpad.diffcore.tensor import set_default_dtype
from lpad.vae.model import VaeModel
from lpad.vae.trainer import post_train, train

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "model.ckpt"


class Command(str, Enum):
    SYNTH = "synth"
    TRAIN = "train"
    EVAL = "eval"
    TRANSFER = "transfer"
    SWEEP = "sweep"

    @classmethod
    def get_all_values(cls) -> set[str]:
        return {command.value for command in cls}


class Job(NamedTuple):
    command: Command
    cfg: RunConfig
    repeat: int
    directory: Path


class JobResult(NamedTuple):
    repeat: int
    report: Optional[EvalReport]


def header(cfg: RunConfig, **extra) -> list[str]:
    """Config snapshot lines embedded in every artifact."""
    snapshot = cfg.snapshot()
    snapshot.update({key: str(value) for key, value in extra.items()})
    return snapshot_lines(snapshot)


def load_source(cfg: RunConfig) -> Dataset:
    if cfg.data is not None:
        return load_csv(cfg.data, CsvSchema(binary_channels=cfg.binary_channels))
    return synth_generate(cfg.synth_config())


def load_target(cfg: RunConfig) -> Dataset:
    if cfg.target_data is not None:
        return load_csv(cfg.target_data, CsvSchema(binary_channels=cfg.binary_channels))
    return synth_generate(cfg.synth_config(seed=cfg.target_synth_seed))


def prepare(
    ds: Dataset, fractions: Sequence[float], seed: int, mode: NormMode, stats: Optional[NormStats] = None
) -> list[Dataset]:
    """Splits ``ds`` and normalizes every part.

    Statistics are fitted on the first part unless ``stats`` is given, as for
    transfer targets that must share the source training scale.
    """
    parts = split(ds, SplitSpec(fractions=tuple(fractions), seed=seed))
    if stats is None:
        stats = fit_stats(parts[0], mode)
    parts = [normalize(part, mode, stats) for part in parts]
    if mode == NormMode.MINMAX:
        parts = [clip_unit(part) for part in parts]
    return parts


def _model_for(cfg: RunConfig, ds: Dataset, repeat: int) -> VaeModel:
    return VaeModel(cfg.model_spec(ds.channels, ds.window_len), seed=cfg.seed + repeat)


def _load_model(path: Path, ds: Dataset) -> VaeModel:
    model = VaeModel.from_checkpoint(load_checkpoint(path))
    if model.spec.net.in_channels != ds.channels:
        raise ShapeError(
            "load_model",
            f"checkpoint expects {model.spec.net.in_channels} channels, data has {ds.channels}",
            (ds.channels,),
        )
    logger.info("Loaded model from %s", path)
    return model


def _train_on_source(cfg: RunConfig, job: Job, parts: list[Dataset]) -> tuple[VaeModel, Dataset]:
    """Trains on the source training split and returns the model with the set it was trained on."""
    train_ds, val_ds = parts[0], parts[1] if len(parts) > 2 else None
    if cfg.combine_train_val and val_ds is not None:
        train_ds, val_ds = concat_datasets(train_ds, val_ds), None
    model = _model_for(cfg, train_ds, job.repeat)
    model, stats = train(
        model, train_ds, val_ds, cfg.train_config(job.repeat), checkpoint_path=job.directory / CHECKPOINT_NAME
    )
    lines = header(cfg, repeat=job.repeat)
    stats.to_csv(job.directory / "train_stats.csv", lines)
    if stats.phase_trace:
        stats.phase_trace_csv(job.directory / "phase_trace.csv", lines)
    return model, train_ds


def _source_model(cfg: RunConfig, job: Job, parts: list[Dataset]) -> tuple[VaeModel, Dataset]:
    train_ds = parts[0]
    if cfg.combine_train_val and len(parts) > 2:
        train_ds = concat_datasets(parts[0], parts[1])
    if cfg.checkpoint is not None:
        return _load_model(cfg.checkpoint, train_ds), train_ds
    existing = job.directory / CHECKPOINT_NAME
    if job.command != Command.TRAIN and existing.exists():
        return _load_model(existing, train_ds), train_ds
    return _train_on_source(cfg, job, parts)


def _eval_kwargs(cfg: RunConfig, repeat: int) -> dict:
    return {
        "samples": cfg.samples,
        "seed": cfg.seed + repeat,
        "transform": cfg.transform,
        "anomaly_fraction": cfg.anomaly_fraction,
        "config": {**cfg.snapshot(), "repeat": str(repeat)},
    }


def _write_report(cfg: RunConfig, report: EvalReport, directory: Path, stem: str) -> None:
    report.write(directory, stem)
    write_table(
        score_histogram(report, cfg.histogram_bins), directory / f"{stem}_histogram.csv", snapshot_lines(report.config)
    )


def run_job(job: Job) -> JobResult:
    """Runs one repeat (or one sweep cell repeat) of ``train``, ``eval`` or ``transfer``."""
    cfg = job.cfg
    set_default_dtype(cfg.dtype)
    job.directory.mkdir(parents=True, exist_ok=True)
    source_parts = prepare(load_source(cfg), cfg.split, cfg.seed, cfg.norm_mode)
    model, train_ds = _source_model(cfg, job, source_parts)

    if job.command == Command.TRAIN:
        return JobResult(job.repeat, None)

    if job.command in (Command.EVAL, Command.SWEEP):
        if cfg.threshold_source != ThresholdSource.SELF:
            logger.warning("threshold_source '%s' applies to transfer only", cfg.threshold_source.value)
        report = evaluate_model(model, train_ds, source_parts[-1], **_eval_kwargs(cfg, job.repeat))
        _write_report(cfg, report, job.directory, "eval")
        return JobResult(job.repeat, report)

    transform = cfg.transform or ScoreTransform.default_for(model.spec.recon_metric)
    fraction = train_ds.anomaly_fraction if 0.0 < train_ds.anomaly_fraction < 1.0 else cfg.anomaly_fraction
    if fraction is None:
        raise ConfigurationError("anomaly_fraction: source training labels hold no anomaly")
    source_threshold, _ = training_threshold(
        model, train_ds, cfg.samples, np.random.default_rng([cfg.seed + job.repeat, 5]), transform, fraction
    )
    target_train, target_test = prepare(
        load_target(cfg), cfg.target_split, cfg.seed, cfg.norm_mode, stats=source_parts[0].norm_stats
    )[:2]
    if model.spec.net.in_channels != target_train.channels:
        raise ShapeError(
            "transfer",
            f"model expects {model.spec.net.in_channels} channels, target data has {target_train.channels}",
            (target_train.channels,),
        )
    if cfg.post_train:
        model, stats = post_train(
            model,
            target_train,
            None,
            cfg.post_train_config(job.repeat),
            checkpoint_path=job.directory / "post_trained.ckpt",
        )
        stats.to_csv(job.directory / "post_train_stats.csv", header(cfg, repeat=job.repeat))
    report = evaluate_model(
        model,
        target_train,
        target_test,
        threshold_source=cfg.threshold_source,
        source_threshold=source_threshold,
        **_eval_kwargs(cfg, job.repeat),
    )
    _write_report(cfg, report, job.directory, "transfer")
    return JobResult(job.repeat, report)


def run_jobs(jobs: Sequence[Job], workers: int = 1) -> list[JobResult]:
    """Runs ``jobs`` inline or in a process pool; results keep job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [run_job(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run_job, jobs))


def _write_summary(cfg: RunConfig, reports: Sequence[EvalReport], directory: Path, stem: str) -> Path:
    summary = summarize_repeats(reports)
    path = directory / f"{stem}_summary.json"
    path.write_text(
        json.dumps({"summary": summary.model_dump(), "config": cfg.snapshot()}, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    rows = [{"repeat": i, "precision": r.precision, "recall": r.recall, "f1": r.f1} for i, r in enumerate(reports)]
    write_table(pd.DataFrame(rows), directory / f"{stem}_repeats.csv", header(cfg))
    logger.info(
        "%d repeats: precision %.3f +- %.3f, recall %.3f +- %.3f, f1 %.3f +- %.3f",
        summary.repeats,
        summary.precision_mean,
        summary.precision_sd,
        summary.recall_mean,
        summary.recall_sd,
        summary.f1_mean,
        summary.f1_sd,
    )
    return path


def _repeat_jobs(command: Command, cfg: RunConfig, base: Path) -> list[Job]:
    return [Job(command, cfg, r, base / f"repeat_{r}") for r in range(cfg.repeats)]


def run_synth(cfg: RunConfig) -> Path:
    ds = synth_generate(cfg.synth_config())
    return export_csv(ds, cfg.output_dir / "synth.csv", header(cfg))


def run_sweep(cfg: RunConfig, workers: int = 1) -> list[Path]:
    """Trains and evaluates every (latent_dim, beta) cell ``repeats`` times.

    Writes ``sweep_f1.csv``, ``sweep_precision.csv`` and ``sweep_recall.csv``
    with one row per latent size and one column per beta, cells holding the
    mean over repeats.
    """
    cells = [(latent, beta) for latent in cfg.sweep_latents for beta in cfg.sweep_betas]
    jobs = []
    for latent, beta in cells:
        cell_cfg = cfg.with_overrides(latent_dim=latent, beta=beta)
        base = cfg.output_dir / "sweep" / f"latent{latent}_beta{beta:g}"
        jobs.extend(_repeat_jobs(Command.SWEEP, cell_cfg, base))
    results = run_jobs(jobs, workers)
    rows = []
    for job, result in zip(jobs, results):
        rows.append(
            {
                "latent_dim": job.cfg.latent_dim,
                "beta": job.cfg.beta,
                "precision": result.report.precision,
                "recall": result.report.recall,
                "f1": result.report.f1,
            }
        )
    table = pd.DataFrame(rows)
    paths = []
    for metric in ("f1", "precision", "recall"):
        grid = table.pivot_table(index="latent_dim", columns="beta", values=metric, aggfunc="mean")
        grid.columns = [f"beta_{beta:g}" for beta in grid.columns]
        paths.append(write_table(grid.reset_index(), cfg.output_dir / f"sweep_{metric}.csv", header(cfg)))
    return paths


def run(cfg: RunConfig, command: Command, workers: int = 1) -> int:
    """Executes ``command`` and returns the exit status (0 on success).

    Raises:
        LpadError: On any failure; :func:`lpad.cli.main.main` turns it into a
            nonzero exit status.
    """
    command = Command(command)
    set_default_dtype(cfg.dtype)
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    logger.info("Running %s (seed %d, output %s)", command.value, cfg.seed, cfg.output_dir)
    if command == Command.SYNTH:
        path = run_synth(cfg)
        logger.info("Synthetic dataset written to %s", path)
    elif command == Command.SWEEP:
        paths = run_sweep(cfg, workers)
        logger.info("Sweep tables written to %s", ", ".join(str(p) for p in paths))
    else:
        results = run_jobs(_repeat_jobs(command, cfg, cfg.output_dir), workers)
        reports = [r.report for r in results if r.report is not None]
        if reports:
            _write_summary(cfg, reports, cfg.output_dir, command.value)
    logger.info("Finished %s", command.value)
    return 0
