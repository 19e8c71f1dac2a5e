from .core.base import Mode, Module, Primitive
from .core.decorators import elementwise, primitive
from .core.exceptions import (
    CheckpointError,
    ConfigurationError,
    DivergenceError,
    DomainError,
    EnumerationLimitError,
    LpadError,
    NonFiniteError,
    ParseError,
    ShapeError,
    UnknownKeyError,
    UsageError,
)
from .diffcore.tensor import Parameter, Tensor, no_grad, set_default_dtype
from .diffcore.params import Adam, ParamStore
from .nets.config import NetConfig
from .rbm.prior import RbmPrior, Topology
from .rbm.oracle import exact_oracle
from .vae.spec import ModelSpec, PriorKind, RbmSpec, ReconMetric, TrainConfig
from .vae.model import VaeModel
from .vae.loss import beta_elbo_loss
from .vae.trainer import TrainStats, post_train, reconstruct, train
from .datapipe.dataset import Dataset, NormMode
from .datapipe.io import export_csv, load_csv
from .datapipe.normalize import normalize
from .datapipe.split import SplitSpec, split
from .datapipe.synth import SynthConfig, synth_generate
from .anomaly.evaluate import evaluate_model
from .anomaly.metrics import metrics
from .anomaly.report import EvalReport, ThresholdSource
from .anomaly.scoring import ScoreVector, log_transform, score
from .anomaly.threshold import classify, normal_quantile, threshold

__all__ = [
    # Base
    "Mode",
    "Module",
    "Primitive",
    "elementwise",
    "primitive",
    # Errors
    "LpadError",
    "ConfigurationError",
    "UnknownKeyError",
    "ShapeError",
    "DomainError",
    "UsageError",
    "NonFiniteError",
    "DivergenceError",
    "ParseError",
    "EnumerationLimitError",
    "CheckpointError",
    # Differentiation
    "Tensor",
    "Parameter",
    "no_grad",
    "set_default_dtype",
    "ParamStore",
    "Adam",
    # Models
    "NetConfig",
    "RbmPrior",
    "Topology",
    "exact_oracle",
    "ModelSpec",
    "RbmSpec",
    "PriorKind",
    "ReconMetric",
    "TrainConfig",
    "VaeModel",
    "beta_elbo_loss",
    "TrainStats",
    "train",
    "post_train",
    "reconstruct",
    # Data
    "Dataset",
    "NormMode",
    "load_csv",
    "export_csv",
    "normalize",
    "SplitSpec",
    "split",
    "SynthConfig",
    "synth_generate",
    # Anomaly detection
    "score",
    "ScoreVector",
    "log_transform",
    "normal_quantile",
    "threshold",
    "classify",
    "metrics",
    "EvalReport",
    "ThresholdSource",
    "evaluate_model",
]
