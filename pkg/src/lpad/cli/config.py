"""
Run configuration files.

A configuration file holds flat UTF-8 ``key = value`` lines; ``#`` starts a
comment and lists are comma separated. The optional key ``profile`` selects
one of :data:`PROFILES` as the base; the remaining keys override it.

Example:
    .. code-block:: text

        profile = desk-rbm
        beta = 25
        seed = 3
        output_dir = runs/rbm-b25
"""

import logging
from pathlib import Path
from typing import Any, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from lpad.anomaly.report import ThresholdSource
from lpad.anomaly.scoring import ScoreTransform
from lpad.core.exceptions import ConfigurationError, UnknownKeyError
from lpad.datapipe.dataset import NormMode
from lpad.datapipe.split import SplitSpec
from lpad.datapipe.synth import AnomalyKind, SynthConfig
from lpad.diffcore.ops.pooling import UpsampleMode
from lpad.nets.config import DEFAULT_BRANCHES, BranchConfig, DecoderOutput, HeadKind, NetConfig, padded_length
from lpad.priors.bernoulli import KLMode
from lpad.rbm.prior import PositivePhaseKind, Topology
from lpad.vae.spec import ModelSpec, PriorKind, RbmSpec, ReconMetric, TrainConfig

logger = logging.getLogger(__name__)

_BASELINE = {"epochs": 400, "minibatch": 128, "lr": 3e-4}
_DESK = {
    "epochs": 50,
    "branches": "8:3,8:5,8:7",
    "synth_instances": 2000,
    "synth_anomaly_fraction": 0.05,
    "synth_seed": 1,
    "repeats": 5,
}

PROFILES: dict[str, dict[str, Any]] = {
    "baseline-gaussian": {**_BASELINE, "prior": "gaussian", "latent_dim": 256, "beta": 60},
    "baseline-bernoulli": {**_BASELINE, "prior": "bernoulli", "latent_dim": 128, "beta": 60, "lambda": 0.1},
    "baseline-rbm": {
        **_BASELINE,
        "prior": "rbm",
        "latent_dim": 64,
        "beta": 60,
        "lambda": 0.1,
        "chains": 500,
        "sweeps": 20,
    },
    "approach-rbm": {
        **_BASELINE,
        "prior": "rbm",
        "latent_dim": 32,
        "beta": 30,
        "lambda": 0.1,
        "chains": 500,
        "sweeps": 25,
        "recon_metric": "bce",
        "norm": "minmax",
        "synth_anomaly_kind": "delayed_step",
    },
    "desk-gaussian": {**_DESK, "prior": "gaussian", "latent_dim": 16, "beta": 10},
    "desk-bernoulli": {**_DESK, "prior": "bernoulli", "latent_dim": 16, "beta": 10, "lambda": 0.1},
    "desk-rbm": {
        **_DESK,
        "prior": "rbm",
        "latent_dim": 8,
        "beta": 10,
        "lambda": 0.1,
        "chains": 500,
        "sweeps": 20,
    },
}


def _split_list(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class RunConfig(BaseModel):
    """Every setting of a command, flat, one field per configuration key.

    Model and data shapes are fixed only once the data is known; see
    :meth:`model_spec`. At parse time the model is validated against the
    synthetic generator's channel count and window length.
    """

    model_config = ConfigDict(frozen=True, populate_by_name=True, extra="forbid")

    # model
    prior: PriorKind = PriorKind.GAUSSIAN
    latent_dim: int = 16
    beta: float = 1.0
    lam: float = Field(default=0.1, alias="lambda")
    branches: tuple[BranchConfig, ...] = DEFAULT_BRANCHES
    blocks_per_branch: int = 2
    recon_metric: ReconMetric = ReconMetric.MSE
    kl_mode: KLMode = KLMode.MC
    logvar_softplus: bool = True
    upsample: UpsampleMode = UpsampleMode.LINEAR
    topology: Topology = Topology.AUGMENTED_POSITIVE_PHASE
    chains: int = 500
    sweeps: int = 20
    positive_phase: PositivePhaseKind = PositivePhaseKind.CONTINUOUS_VISIBLE_DISCRETE_HIDDEN
    replay_fraction: float = 0.0
    l2_weight: float = 0.0
    dtype: str = "float64"

    # training
    epochs: int = 400
    minibatch: int = 128
    lr: float = 3e-4
    adam_betas: tuple[float, float] = (0.9, 0.999)
    checkpoint_every: Optional[int] = None
    combine_train_val: bool = False
    post_train: bool = False
    post_train_epochs: int = 300
    post_train_minibatch: int = 32

    # data
    data: Optional[Path] = None
    target_data: Optional[Path] = None
    checkpoint: Optional[Path] = None
    binary_channels: tuple[str, ...] = ()
    norm: Optional[NormMode] = None
    split: tuple[float, ...] = (0.6, 0.2, 0.2)
    target_split: tuple[float, ...] = (0.5, 0.5)
    synth_instances: int = 2000
    synth_channels: int = 7
    synth_binary_channels: int = 2
    synth_window_len: int = 60
    synth_anomaly_fraction: float = 0.05
    synth_anomaly_kind: AnomalyKind = AnomalyKind.LEVEL_DROP
    synth_seed: int = 1
    target_synth_seed: int = 2

    # evaluation
    samples: int = 10
    transform: Optional[ScoreTransform] = None
    threshold_source: ThresholdSource = ThresholdSource.SELF
    anomaly_fraction: Optional[float] = None
    histogram_bins: int = 30

    # experiment
    seed: int
    repeats: int = 1
    output_dir: Path = Path("runs")
    sweep_latents: tuple[int, ...] = (32, 64, 128, 256)
    sweep_betas: tuple[float, ...] = (1.0, 10.0, 25.0, 50.0, 100.0)
    profile: Optional[str] = None

    @field_validator(
        "binary_channels", "split", "target_split", "sweep_latents", "sweep_betas", "adam_betas", mode="before"
    )
    @classmethod
    def _parse_list(cls, value: Any) -> Any:
        return _split_list(value)

    @field_validator("branches", mode="before")
    @classmethod
    def _parse_branches(cls, value: Any) -> Any:
        if isinstance(value, str):
            pairs = []
            for item in _split_list(value):
                filters, _, kernel = item.partition(":")
                if not kernel:
                    raise ConfigurationError(f"branches: expected 'filters:kernel', got '{item}'")
                pairs.append((int(filters), int(kernel)))
            return pairs
        return value

    @field_validator(
        "latent_dim",
        "epochs",
        "minibatch",
        "post_train_epochs",
        "post_train_minibatch",
        "samples",
        "repeats",
        "synth_instances",
        "histogram_bins",
    )
    @classmethod
    def _validate_positive(cls, value: int, info) -> int:
        if value < 1:
            raise ConfigurationError(f"{info.field_name} must be at least 1, got {value}")
        return value

    @field_validator("dtype")
    @classmethod
    def _validate_dtype(cls, value: str) -> str:
        if value not in ("float64", "float32"):
            raise ConfigurationError(f"dtype must be 'float64' or 'float32', got '{value}'")
        return value

    @field_validator("profile")
    @classmethod
    def _validate_profile(cls, value: Optional[str]) -> Optional[str]:
        if value is not None and value not in PROFILES:
            raise ConfigurationError(
                f"profile must be one of {', '.join(sorted(PROFILES))}, got '{value}'"
            )
        return value

    @model_validator(mode="after")
    def _validate_consistency(self) -> "RunConfig":
        self.split_spec()
        SplitSpec(fractions=self.target_split, seed=self.seed)
        self.train_config()
        self.synth_config()
        self.model_spec(self.synth_channels, self.synth_window_len)
        for path_key in ("data", "target_data", "checkpoint"):
            path = getattr(self, path_key)
            if path is not None and not path.exists():
                raise ConfigurationError(f"{path_key}: path '{path}' does not exist")
        if self.anomaly_fraction is not None and not 0.0 < self.anomaly_fraction < 1.0:
            raise ConfigurationError(f"anomaly_fraction must lie in (0, 1), got {self.anomaly_fraction}")
        return self

    @property
    def norm_mode(self) -> NormMode:
        """``zscore`` for mse models and ``minmax`` for bce models unless set."""
        if self.norm is not None:
            return self.norm
        return NormMode.MINMAX if self.recon_metric == ReconMetric.BCE else NormMode.ZSCORE

    def with_overrides(self, **changes: Any) -> "RunConfig":
        """A re-validated copy with some keys replaced."""
        values = self.model_dump(by_alias=True)
        values.update(changes)
        return RunConfig.model_validate(values)

    def model_spec(self, in_channels: int, window_len: int) -> ModelSpec:
        """Model for data of ``in_channels`` channels and windows of ``window_len`` steps."""
        discrete = self.prior != PriorKind.GAUSSIAN
        net = NetConfig(
            in_channels=in_channels,
            window_len=padded_length(window_len, self.blocks_per_branch),
            branches=self.branches,
            blocks_per_branch=self.blocks_per_branch,
            latent_dim=self.latent_dim,
            head_kind=HeadKind.BERNOULLI if discrete else HeadKind.GAUSSIAN,
            decoder_output=DecoderOutput.SIGMOID if self.recon_metric == ReconMetric.BCE else DecoderOutput.LINEAR,
            logvar_softplus=self.logvar_softplus,
            upsample=self.upsample,
        )
        rbm = None
        if self.prior == PriorKind.RBM:
            rbm = RbmSpec(
                topology=self.topology,
                chains=self.chains,
                sweeps=self.sweeps,
                positive_phase=self.positive_phase,
                replay_fraction=self.replay_fraction,
                l2_weight=self.l2_weight,
            )
        return ModelSpec(
            prior_kind=self.prior,
            net=net,
            beta=self.beta,
            lam=self.lam,
            rbm=rbm,
            recon_metric=self.recon_metric,
            kl_mode=self.kl_mode,
        )

    def train_config(self, repeat: int = 0) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            minibatch=self.minibatch,
            lr=self.lr,
            seed=self.seed + repeat,
            adam_betas=self.adam_betas,
            checkpoint_every=self.checkpoint_every,
        )

    def post_train_config(self, repeat: int = 0) -> TrainConfig:
        return self.train_config(repeat).model_copy(
            update={"epochs": self.post_train_epochs, "minibatch": self.post_train_minibatch}
        )

    def split_spec(self) -> SplitSpec:
        return SplitSpec(fractions=self.split, seed=self.seed)

    def synth_config(self, seed: Optional[int] = None) -> SynthConfig:
        return SynthConfig(
            n_instances=self.synth_instances,
            channels=self.synth_channels,
            binary_channels=self.synth_binary_channels,
            window_len=self.synth_window_len,
            anomaly_fraction=self.synth_anomaly_fraction,
            anomaly_kind=self.synth_anomaly_kind,
            seed=self.synth_seed if seed is None else seed,
        )

    def snapshot(self) -> dict[str, Any]:
        """Flat ``key -> text`` view used in artifact headers; lists are comma separated."""
        values = self.model_dump(mode="json", by_alias=True)
        values["branches"] = ",".join(f"{b.filters}:{b.kernel}" for b in self.branches)
        snapshot = {}
        for key, value in values.items():
            if isinstance(value, (list, tuple)):
                value = ",".join(str(v) for v in value)
            snapshot[key] = "" if value is None else str(value)
        return snapshot


def _known_keys() -> set[str]:
    keys = set()
    for name, field in RunConfig.model_fields.items():
        keys.add(field.alias or name)
    return keys


def _read_pairs(path: Path) -> dict[str, str]:
    pairs: dict[str, str] = {}
    with path.open(encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{lineno}: expected 'key = value', got '{line}'")
            key = key.strip()
            if key in pairs:
                raise ConfigurationError(f"{path}:{lineno}: key '{key}' given twice")
            pairs[key] = value.strip()
    return pairs


def build_config(pairs: dict[str, Any]) -> RunConfig:
    """Validates flat ``key -> value`` pairs, applying the selected profile first.

    Raises:
        UnknownKeyError: For a key that is not a configuration key.
        ConfigurationError: For any invalid value; the message names the key.
    """
    known = _known_keys()
    for key in pairs:
        if key not in known:
            raise UnknownKeyError(key)
    values: dict[str, Any] = {}
    profile = pairs.get("profile")
    if profile:
        if profile not in PROFILES:
            raise ConfigurationError(f"profile must be one of {', '.join(sorted(PROFILES))}, got '{profile}'")
        values.update(PROFILES[profile])
    values.update({k: v for k, v in pairs.items() if v != ""})
    if "seed" not in values:
        raise ConfigurationError("seed: a seed is required")
    try:
        return RunConfig.model_validate(values)
    except ValidationError as exc:
        error = exc.errors()[0]
        key = ".".join(str(part) for part in error["loc"]) or "config"
        raise ConfigurationError(f"{key}: {error['msg']}") from exc


def parse_config(path: Union[str, Path]) -> RunConfig:
    """Reads and validates a configuration file.

    Raises:
        ConfigurationError: If the file cannot be read or a key or value is
            invalid (see :func:`build_config`).
    """
    path = Path(path)
    try:
        pairs = _read_pairs(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration '{path}': {exc}") from exc
    cfg = build_config(pairs)
    logger.debug("Parsed configuration %s: %s", path, cfg.snapshot())
    return cfg
